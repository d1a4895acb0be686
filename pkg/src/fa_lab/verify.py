"""Theorem and identity verification suites behind `fa-lab verify`.

Each suite returns a list of (check name, passed, detail) triples with the
measured value against its threshold, so CI output is self-explanatory.
"""

from __future__ import annotations

import math

import numpy as np

from . import dynamics, experiments, stationary
from .diagnostics import trace_potential
from .numerics import least_squares, orthonormalize
from .problem import make_feedback, make_target, rng_for
from .state import FactorState

SUITES = ("facts", "lemma41", "thm42", "thm43", "thm44", "thm31", "appendixE", "all")

Check = tuple[str, bool, str]


def _fa_star_setup(n, m, r, seed, spectrum="flat(4)"):
    Y = make_target(n, m, spectrum, seed)
    Z0 = orthonormalize(rng_for(seed, "verify-Z0").standard_normal((n, r)))
    C = make_feedback(r, m, seed)
    init = FactorState(Z=Z0, W=least_squares(Z0, Y.Y))
    return Y, init, C


def suite_facts(seed: int = 42) -> list[Check]:
    """Optimal-W residual and Gram conservation along discrete FA* runs."""
    checks: list[Check] = []
    Y, init, C = _fa_star_setup(20, 15, 4, seed)
    state = init
    worst = 0.0
    y_norm = np.linalg.norm(Y.Y)
    for _ in range(200):
        state = dynamics.fa_star_step(state, Y.Y, C.C, 0.05)
        worst = max(worst, np.linalg.norm(state.Z.T @ (Y.Y - state.Yhat)))
    checks.append(("fact A.1: ||Z^T(Y - Yhat)|| stays <= 1e-8 ||Y||_F",
                   worst <= 1e-8 * y_norm, f"worst {worst:.3e} vs {1e-8 * y_norm:.3e}"))

    def gram_drift(eta, steps):
        st = init
        for _ in range(steps):
            st = dynamics.fa_star_step(st, Y.Y, C.C, eta)
        return np.linalg.norm(st.Z.T @ st.Z - init.Z.T @ init.Z)

    d1 = gram_drift(0.02, 200)
    d2 = gram_drift(0.01, 400)
    ratio = d1 / d2
    checks.append(("fact A.2: Gram drift halves with eta (ratio in [4/3, 3])",
                   4 / 3 <= ratio <= 3.0, f"drift ratio {ratio:.3f} "
                   f"(eta 0.02: {d1:.2e}, eta 0.01: {d2:.2e})"))
    return checks


def suite_lemma41(seed: int = 42) -> list[Check]:
    """Converged FA* lands on the projection predicted by the stationary oracle."""
    checks: list[Check] = []
    n = 40
    for r in (3, 5, 10):
        Y = make_target(n, n, "flat(40)", seed + r)
        Z0 = orthonormalize(rng_for(seed + r, "lem41-Z0").standard_normal((n, r)))
        C = make_feedback(r, n, seed + r)
        init = FactorState(Z=Z0, W=least_squares(Z0, Y.Y))
        cfg = dynamics.TrainerConfig(rule="FA_STAR", eta=0.05, max_steps=400_000,
                                     record_stride=100_000, stop_residual=1e-16)
        _recs, final = dynamics.run(Y, init, C, cfg)
        predicted = stationary.predicted_solution(Y, C)
        gap = np.linalg.norm(final.Yhat - predicted)
        ok = gap <= 1e-3 * np.linalg.norm(Y.Y)
        checks.append((f"lemma 4.1: converged FA* Yhat matches projection (r={r})",
                       ok, f"gap {gap:.3e} vs {1e-3 * np.linalg.norm(Y.Y):.3e}"))
        direct = np.linalg.norm(Y.Y - stationary.predicted_solution(Y, C)) ** 2
        formula = stationary.projection_error(Y, Y.Y @ C.C.T)
        rel = abs(direct - formula) / max(direct, 1e-300)
        checks.append((f"lemma B.1: spectral error formula = direct residual (r={r})",
                       rel <= 1e-10, f"relative gap {rel:.3e} vs 1e-10"))
    return checks


def _scenario_checks(name: str, heavy: bool = False) -> list[Check]:
    spec = experiments.scenario(name)
    _rows, summary = experiments.run_scenario(spec, heavy=heavy)
    return [(f"{name}: {c['rule']} seed {c['seed']}", c["passed"], c["notes"])
            for c in summary["cells"]] + [
        (f"{name}: scenario predicate", summary["passed"], summary["notes"])]


def suite_thm42(seed: int = 42) -> list[Check]:
    checks = _scenario_checks("thm42")
    Y = make_target(30, 30, "flat(8)", seed)
    C = make_feedback(8, 30, seed)
    err = stationary.projection_error(Y, Y.Y @ C.C.T)
    checks.append(("thm 4.2: oracle predicted error is 0 when r = rank(Y)",
                   err <= 1e-12, f"predicted error {err:.3e} vs 1e-12"))
    return checks


def suite_thm43(heavy: bool = False) -> list[Check]:
    return _scenario_checks("thm43", heavy=heavy)


def suite_thm44() -> list[Check]:
    return _scenario_checks("thm44")


def suite_thm31() -> list[Check]:
    return _scenario_checks("thm31bound")


def suite_appendix_e(seed: int = 42) -> list[Check]:
    """Tr(V) is nonincreasing along FA at a rate matching the residual."""
    rng = rng_for(seed, "appE")
    Y = rng.standard_normal((10, 10))
    init = FactorState(Z=0.1 * rng.standard_normal((10, 3)),
                       W=0.1 * rng.standard_normal((3, 10)))
    C = make_feedback(3, 10, seed)
    state = init
    eta = 1e-3
    worst_increase = -math.inf
    worst_rate_err = 0.0
    for _ in range(2000):
        tv = trace_potential(state, Y, C.C)
        res = np.linalg.norm((Y - state.Yhat) @ C.C.T) ** 2
        state = dynamics.fa_step(state, Y, C.C, eta)
        tv_next = trace_potential(state, Y, C.C)
        worst_increase = max(worst_increase, tv_next - tv)
        rate = (tv_next - tv) / eta
        worst_rate_err = max(worst_rate_err, abs(rate + res) / max(res, 1.0))
    return [
        ("appendix E: Tr(V) nonincreasing along FA (slack 1e-8)",
         worst_increase <= 1e-8, f"worst per-step increase {worst_increase:.3e}"),
        ("appendix E: d Tr(V)/dt = -||(Y - Yhat) C^T||_F^2 (rel 5e-2)",
         worst_rate_err <= 5e-2, f"worst relative rate error {worst_rate_err:.3e}"),
    ]


def run_suite(name: str, heavy: bool = False) -> list[Check]:
    if name == "facts":
        return suite_facts()
    if name == "lemma41":
        return suite_lemma41()
    if name == "thm42":
        return suite_thm42()
    if name == "thm43":
        return suite_thm43(heavy=heavy)
    if name == "thm44":
        return suite_thm44()
    if name == "thm31":
        return suite_thm31()
    if name == "appendixE":
        return suite_appendix_e()
    if name == "all":
        out: list[Check] = []
        for suite in SUITES[:-1]:
            out.extend(run_suite(suite, heavy=heavy))
        return out
    raise ValueError(f"unknown suite {name!r}; known: {', '.join(SUITES)}")
