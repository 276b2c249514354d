"""Smoke test for the Python bindings.

Build the module first, e.g.

    cargo build --release -p implosion-py --features extension-module
    cp target/release/libimplosion_py.so python/implosion_py.so

or run `maturin develop` inside crates/implosion-py.
"""

import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import implosion_py as ip


def main():
    params = ip.Parameters.from_ell(3, 2.0)
    assert abs(params.gamma - 2.0) < 1e-12
    assert params.r_star < math.sqrt(3)

    try:
        ip.Parameters.from_ell(3, 3.0)
    except ValueError:
        pass
    else:
        raise AssertionError("triple point accepted")

    prof = ip.Profile.find(params)
    assert 1.0 < prof.r < params.r_star
    print(f"r = {prof.r:.12f}  Z2 = {prof.z2:.12f}")

    rho, u, psi = prof.at(0.5)
    assert rho > 0

    margins = prof.verify()
    assert margins["passes"], margins
    print("margins:", {k: round(v, 6) for k, v in margins.items() if isinstance(v, float)})

    assert abs(prof.shifted_root(0.0) - prof.z2) < 1e-10

    e_rho, e_u = prof.rates([0.9, 0.99, 0.999])
    assert abs(e_u + (prof.r - 1) / prof.r) < 1e-3
    assert abs(e_rho + 2.0 * (prof.r - 1) / prof.r) < 1e-3

    run = prof.simulate(h=0.05, tau_span=0.5)
    assert run["stop"] == "finished", run["stop"]
    print(f"deviation after tau=0.5: {run['deviation'][-1]:.3e}")
    print("ok")


if __name__ == "__main__":
    main()
