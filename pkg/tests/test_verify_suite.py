import json

import pandas as pd
import pytest

from core.exceptions import ConfigError
from core.global_vars import CONFIG
from core.solvers import TRACE_COLUMNS
from core.verify_suite import VerificationCase, descent_checks, run_all


def test_small_sizes_pass():
    report = run_all(sizes=[(2, 2, 1), (3, 3, 2), (3, 3, 4)], seeds=range(2), psk_order=8, admm_iters=60)
    assert report.passed, [(case.name, case.dims, case.measured) for case in report.failures]
    names = {case.name for case in report.cases}
    assert {'rank_D', 'rank_U', 'factored_U', 'scheme2_descent_bound', 'scheme2_monotone',
            'scheme2_sufficient_decrease', 'scheme2_stationarity', 'factor_count'} <= names


def test_non_square_sizes_skip_square_ranks():
    report = run_all(sizes=[(4, 3, 2)], seeds=[0], admm_iters=20)
    names = {case.name for case in report.cases}
    assert 'rank_U' not in names
    assert 'rank_D' in names
    assert report.passed


def test_report_json():
    report = run_all(sizes=[(2, 2, 1)], seeds=[0], admm_iters=10)
    data = json.loads(report.to_json())
    assert data['passed'] is True
    assert data['failures'] == 0
    assert len(data['cases']) == len(report.cases)


def test_oversized_problem_rejected():
    with pytest.raises(ConfigError):
        run_all(sizes=[(20, 20, 13)], seeds=[0])


def test_case_records_failure():
    case = VerificationCase('rank_D', (2, 2, 1), [0, 1], 0.0)
    case.record(0, 4, True)
    assert case.passed
    case.record(1, 3, False)
    assert not case.passed
    assert case.measured == {'0': 4, '1': 3}


def test_descent_checks_flag_rising_lagrangian():
    # rho = 4, phi = 1, L starts at 2; sufficient decrease is 1 * ||ddelta||^2
    rows = [
        (1, 0.0, 0.0, 0.0, 0.5, 1.0, 2.0, 0.0),
        (2, 0.0, 0.0, 0.0, 0.2, 1.0, 4.0, 0.0),
        (3, 0.0, 0.0, 0.0, 0.3, 0.1, 0.0, 0.0)]
    trace = pd.DataFrame(rows, columns=TRACE_COLUMNS)
    violations, increases, shortfalls = descent_checks(trace, rho=4.0, phi=1.0, tol=1e-9)
    assert increases == 1
    assert violations == 1
    assert shortfalls == 2


def test_default_seed_count():
    assert CONFIG['VERIFY']['SEEDS'] == 100
