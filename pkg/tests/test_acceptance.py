"""Acceptance suite: one test per criterion, each printing a PASS/FAIL
line with the measured figure of merit.  Run with ``pytest -s`` to see
the lines while passing.

All tolerances are pinned here:

 1. mode sums vs reflection series, (Kr,Kd) in {0.2,1,2}x{2,5,20},
    componentwise 1e-5 relative (1e-8 absolute floor), < 30 s total
 2. Kramers-Kronig PV transform reproduces the Re parts to 1e-4 at five
    points, < 60 s
 3. below kd = pi: in-plane Im parts machine zero, axial Im part equals
    -J0(kr)/(4d) to 1e-12, at 20 seeded-random points
 4. imaginary-frequency forms vs defining-integral oracle to 1e-7 at
    (ur, ud) in {0.5,2}x{2,10}
 5. at Kd = 200 the Green components, off-resonant, resonant and static
    tensors all reach free space within 1%
 6. V_B - V_A = 2 Im^2 G / K^2 to rounding and V_B >= |V_A| pointwise
 7. off-resonant tensor shapes vs Kd at Kr = 0.2 (monotone ++ decay,
    +- bump near d ~ r, 00 minimum near d ~ r)
 8. static ratios: single +- maximum > 1 near r = d, monotone 00/++,
    all -> 0 for r/d >> 1
 9. static sums within 1% of the free-space forms at r/d = 0.01
10. analytic vs finite-difference d/dk[k^2 Re G] to 1e-6 at 10 points;
    identical-atom potential path difference < 1e-6
11. two-excited sums with atom B forced to ground reproduce the
    one-excited results to rounding; off-resonant w_a = w_b = dE
12. the quick verification level covers 1 (reduced), 3, 6, 9 in < 60 s
"""

from cavdip.verification import (check_double_pole, check_fig4_shape,
                                 check_fig7_shape,
                                 check_free_space_reductions,
                                 check_imagfreq_oracle,
                                 check_kramers_kronig,
                                 check_representation_equivalence,
                                 check_resonant_algebra,
                                 check_scenario_reductions,
                                 check_static_free_limit,
                                 check_subthreshold, run_checks)


def _report(number, result):
    print(f"criterion {number:02d}: {result.line()}")
    assert result.passed, result.detail


def test_criterion_01_representation_equivalence():
    _report(1, check_representation_equivalence())


def test_criterion_02_kramers_kronig_roundtrip():
    _report(2, check_kramers_kronig())


def test_criterion_03_subthreshold_exactness():
    _report(3, check_subthreshold())


def test_criterion_04_imaginary_frequency_oracle():
    _report(4, check_imagfreq_oracle())


def test_criterion_05_free_space_reductions():
    _report(5, check_free_space_reductions())


def test_criterion_06_resonant_algebra():
    _report(6, check_resonant_algebra())


def test_criterion_07_offresonant_shape():
    _report(7, check_fig4_shape())


def test_criterion_08_static_shape():
    _report(8, check_fig7_shape())


def test_criterion_09_static_free_space_limit():
    _report(9, check_static_free_limit())


def test_criterion_10_double_pole_derivative():
    _report(10, check_double_pole())


def test_criterion_11_scenario_reductions():
    _report(11, check_scenario_reductions())


def test_criterion_12_quick_suite_budget():
    results, ok = run_checks("quick")
    for res in results:
        print(f"criterion 12 [{res.name}]: {res.line()}")
    assert ok
    budget = next(r for r in results if r.name == "quick-runtime-budget")
    assert budget.elapsed < 60.0
