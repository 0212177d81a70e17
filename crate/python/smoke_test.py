"""Smoke test for the compdiv extension module.

Build and install first:
    pip install maturin
    maturin build --release -m crates/py/Cargo.toml -o dist && pip install dist/compdiv-*.whl
"""

import math

import compdiv


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol


def main():
    f1 = compdiv.Family(1, budget_poly=[2], ancillas=1)
    assert len(f1) > 0 and f1.n == 1 and f1.budget == 2
    zero = [[1, 0], [0, 0]]
    mixed = [[0.5, 0], [0, 0.5]]
    assert close(compdiv.divergence("tracedist", zero, mixed, f1), 0.5)
    assert close(compdiv.divergence("relent", zero, mixed, f1), 1.0)
    assert math.isinf(compdiv.divergence("maxdiv", mixed, zero, f1))

    bell = compdiv.bell_state(1)
    f2 = compdiv.Family(2, budget_poly=[0], ancillas=0).with_bell(1)
    lo, hi = compdiv.resource_bracket(bell, 1, 1, f2, samples=10, seed=3)
    assert close(lo, 1.0, 1e-6) and close(hi, 1.0, 1e-6), (lo, hi)

    steps = compdiv.stein(bell, compdiv.sigma_star(1), f2, 0.0, 2, [0, 0, 1])
    assert len(steps) == 2
    for beta, stein_term, bound_term in steps:
        assert 0.0 <= beta <= 1.0 and stein_term <= bound_term + 1e-12

    assert compdiv.continuity_rhs(0.0, 2.0) == 0.0
    assert compdiv.bernstein_k(2, 0.25) > compdiv.bernstein_k(2, 0.5)
    try:
        compdiv.divergence("nope", zero, mixed, f1)
    except ValueError:
        pass
    else:
        raise AssertionError("unknown measure accepted")
    print("python smoke test passed")


if __name__ == "__main__":
    main()
