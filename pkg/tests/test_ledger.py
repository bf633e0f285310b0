"""Tests for the separation ledger."""

from itertools import combinations

import numpy as np
import pytest

from nestlab.combinatorics import (
    CombSequence,
    CombTriple,
    fibonacci_sequence,
    parse_sequence,
    random_admissible_sequence,
)
from nestlab.ledger import (
    BoundQuadruple,
    GrowthRule,
    Infeasible,
    LedgerState,
    SeparationSymbol,
    growth_constant,
    initial_symbol,
    is_feasible,
    lift_norm,
    max_norm,
    normalize,
    run_ledger,
    step_fibonacci_t1,
    step_general,
    step_growth,
    step_symbol,
)

# Rows (beta, lambda1, lambda2) of the constraints "row . x <= rhs" of a
# normalized symbol under bounds; the first four right-hand sides are b1..b4.
_LP_ROWS = np.array(
    [
        [0.5, 1.0, 0.0],
        [0.5, 0.0, -1.0],
        [1.0, -1.0, 0.0],
        [1.0, 0.0, 1.0],
        [-0.5, 1.0, 0.0],
        [-0.5, -1.0, 0.0],
        [-0.5, 0.0, 1.0],
        [-0.5, 0.0, -1.0],
        [0.0, -1.0, -1.0],
        [-1.0, 0.0, 0.0],
    ]
)


def _lp_max_norm(bounds: BoundQuadruple) -> float:
    """Maximal norm by enumerating the vertices of the feasible polytope."""
    rhs = np.array([*bounds.as_tuple(), 0, 0, 0, 0, 0, 0], dtype=float)
    best = 0.0
    for rows in combinations(range(len(_LP_ROWS)), 3):
        matrix = _LP_ROWS[list(rows)]
        if abs(np.linalg.det(matrix)) < 1e-12:
            continue
        vertex = np.linalg.solve(matrix, rhs[list(rows)])
        if np.all(_LP_ROWS @ vertex <= rhs + 1e-9):
            best = max(best, float(vertex[0]))
    return best


def _random_symbol(rng: np.random.Generator) -> SeparationSymbol:
    beta = float(rng.uniform(0.1, 2.0))
    alpha = beta / 2
    lambda1 = float(rng.uniform(-alpha, alpha))
    lambda2 = float(rng.uniform(max(-alpha, -lambda1), alpha))
    return SeparationSymbol(beta, lambda1, lambda2)


def _close(actual: float, expected: float) -> bool:
    return abs(actual - expected) <= 2.0**-40 * max(abs(actual), abs(expected))


def _check_update_formulas(sym: SeparationSymbol, extra: float) -> None:
    alpha = sym.beta / 2
    swapped = step_fibonacci_t1(sym)
    assert _close(swapped.beta, sym.beta)
    assert _close(swapped.lambda1, sym.lambda2 / 2)
    assert _close(swapped.lambda2, sym.lambda1 / 2)
    moved = step_general(sym)
    assert _close(moved.beta, sym.beta)
    assert _close(moved.lambda1, (sym.lambda1 - alpha) / 2)
    assert _close(moved.lambda2, (sym.lambda2 + alpha) / 2)
    assert _close(step_general(sym, extra).beta, sym.beta + extra / 4)


def _check_ledger(seq: CombSequence, tau: float = 0.5) -> None:
    eta = tau / 64
    rows = run_ledger(seq, tau=tau, eta_config=eta)
    assert all(row.mu_lower >= tau / 8 for row in rows)
    for start, end in zip(rows, rows[7:], strict=False):
        assert end.beta >= start.beta + min(start.delta / 8, eta) - 1e-12


class TestSeparationSymbol:
    """Tests for the symbol data type."""

    def test_quadruple(self) -> None:
        """Test s1..s4 from the norm and the corrections."""
        sym = SeparationSymbol(1.0, 0.2, 0.1)
        assert sym.quadruple() == pytest.approx((0.7, 0.4, 0.8, 1.1))
        assert sym.alpha == 0.5

    def test_negative_norm(self) -> None:
        """Test that the norm is nonnegative."""
        with pytest.raises(ValueError, match="Norm must be nonnegative"):
            SeparationSymbol(-0.1)

    def test_validity(self) -> None:
        """Test the correction box and the sum condition."""
        assert SeparationSymbol(1.0, 0.5, -0.5).is_valid()
        assert not SeparationSymbol(1.0, 0.6, 0.0).is_valid()
        assert not SeparationSymbol(1.0, -0.3, 0.2).is_valid()

    def test_negative_bounds(self) -> None:
        """Test that bounds are nonnegative."""
        with pytest.raises(ValueError, match="nonnegative"):
            BoundQuadruple(1.0, -0.1, 1.0, 1.0)


class TestNormalize:
    """Tests for normalization under bounds."""

    def test_initial_symbol(self) -> None:
        """Test the maximal symbol under (tau, 0, tau, tau)."""
        sym = initial_symbol(0.6)
        assert sym.beta == pytest.approx(0.4)
        assert sym.lambda1 == pytest.approx(0.0)
        assert sym.lambda2 == pytest.approx(0.2)
        assert sym.s4 == pytest.approx(0.6)

    def test_half_norm_feasible(self) -> None:
        """Test that (tau / 2, 0, tau / 4) fits under (tau, 0, tau, tau)."""
        tau = 0.8
        bounds = BoundQuadruple(tau, 0.0, tau, tau)
        assert is_feasible(SeparationSymbol(tau / 2, 0.0, tau / 4), bounds)

    def test_zero_bounds(self) -> None:
        """Test that zero bounds give the zero symbol."""
        assert normalize(BoundQuadruple(0.0, 0.0, 0.0, 0.0)) == SeparationSymbol(0.0)

    def test_infeasible_norm(self) -> None:
        """Test a requested norm above the maximum."""
        with pytest.raises(Infeasible, match="exceeds the maximal norm"):
            normalize(BoundQuadruple(1.0, 1.0, 1.0, 1.0), norm=5.0)

    def test_negative_norm(self) -> None:
        """Test a negative requested norm."""
        with pytest.raises(ValueError, match="nonnegative"):
            normalize(BoundQuadruple(1.0, 1.0, 1.0, 1.0), norm=-1.0)

    def test_max_norm_against_vertex_enumeration(self, rng: np.random.Generator) -> None:
        """Test the closed-form maximal norm against a brute-force LP."""
        for _ in range(300):
            bounds = BoundQuadruple(*rng.uniform(0.0, 2.0, size=4))
            assert max_norm(bounds) == pytest.approx(_lp_max_norm(bounds), abs=1e-9)

    def test_normalized_symbol_is_feasible(self, rng: np.random.Generator) -> None:
        """Test feasibility at the maximal and at intermediate norms."""
        for _ in range(300):
            bounds = BoundQuadruple(*rng.uniform(0.0, 2.0, size=4))
            assert is_feasible(normalize(bounds), bounds)
            norm = float(rng.uniform(0.0, 1.0)) * max_norm(bounds)
            sym = normalize(bounds, norm)
            assert sym.beta == pytest.approx(norm)
            assert is_feasible(sym, bounds)


class TestSteps:
    """Tests for the symbol updates of one inducing step."""

    def test_lift_norm(self) -> None:
        """Test the norm gained from widening s3 and s4."""
        lifted = lift_norm(SeparationSymbol(1.0), 0.2)
        assert lifted.beta >= 1.1
        assert lifted.beta == pytest.approx(3.4 / 3)

    def test_lift_norm_negative(self) -> None:
        """Test that the widening is nonnegative."""
        with pytest.raises(ValueError, match="epsilon"):
            lift_norm(SeparationSymbol(1.0), -0.1)

    def test_lift_norm_random(self, rng: np.random.Generator) -> None:
        """Test the guaranteed gain on random symbols."""
        for _ in range(200):
            sym = _random_symbol(rng)
            epsilon = float(rng.uniform(0.0, 1.0))
            assert lift_norm(sym, epsilon).beta >= sym.beta + epsilon / 2 - 1e-9

    def test_fibonacci_step_twice(self) -> None:
        """Test that two immediate returns quarter the corrections."""
        sym = SeparationSymbol(1.0, 0.3, -0.2)
        twice = step_fibonacci_t1(step_fibonacci_t1(sym))
        assert twice == SeparationSymbol(1.0, 0.3 / 4, -0.2 / 4)

    def test_general_step_moves_corrections(self) -> None:
        """Test the corrections after a non-immediate return."""
        sym = step_general(SeparationSymbol(1.0, 0.2, 0.1))
        assert sym.beta == 1.0
        assert sym.lambda1 == pytest.approx(-0.15)
        assert sym.lambda2 == pytest.approx(0.3)

    def test_general_step_extra_annulus(self) -> None:
        """Test the norm gained from an extra annulus."""
        sym = step_general(SeparationSymbol(1.0), extra=0.4)
        assert sym.beta == pytest.approx(1.1)
        assert sym.is_valid()

    def test_general_step_negative_extra(self) -> None:
        """Test that the extra modulus is nonnegative."""
        with pytest.raises(ValueError, match="extra modulus"):
            step_general(SeparationSymbol(1.0), extra=-0.1)

    def test_update_formulas_random(self, rng: np.random.Generator) -> None:
        """Test both updates against their formulas on random symbols."""
        for _ in range(500):
            _check_update_formulas(_random_symbol(rng), float(rng.uniform(0.0, 1.0)))

    @pytest.mark.slow
    def test_update_formulas_full_size(self) -> None:
        """Test the formulas and the norm lift on ten thousand random symbols."""
        rng = np.random.default_rng(11)
        for _ in range(10_000):
            sym = _random_symbol(rng)
            _check_update_formulas(sym, float(rng.uniform(0.0, 1.0)))
            epsilon = float(rng.uniform(0.0, 1.0))
            assert lift_norm(sym, epsilon).beta >= sym.beta + epsilon / 2 - 1e-9

    def test_step_symbol_dispatch(self) -> None:
        """Test that t selects the immediate or the general update."""
        sym = SeparationSymbol(1.0, 0.2, 0.1)
        assert step_symbol(sym, parse_sequence("A+,2,1")[0]) == step_fibonacci_t1(sym)
        assert step_symbol(sym, parse_sequence("A+,3,2")[0]) == step_general(sym)

    def test_steps_keep_validity(self, rng: np.random.Generator) -> None:
        """Test both updates on random valid symbols."""
        for _ in range(300):
            sym = _random_symbol(rng)
            assert sym.is_valid()
            assert step_fibonacci_t1(sym).is_valid()
            assert step_general(sym).is_valid()
            assert step_general(sym, float(rng.uniform(0.0, 0.5))).is_valid()


class TestGrowth:
    """Tests for the growth rules."""

    @pytest.mark.parametrize(
        ("text", "rule"),
        [("C-,3,2", GrowthRule.LONG_POSTCRITICAL), ("A+,3,1", GrowthRule.LONG_CENTRAL)],
    )
    def test_eighth_of_delta(self, text: str, rule: GrowthRule) -> None:
        """Test growth by delta / 8 and the refreshed delta."""
        state = LedgerState(SeparationSymbol(0.8), 0.2)
        grown = step_growth(state, parse_sequence(text)[0], eta_config=0.0)
        assert grown.rule_fired is rule
        assert grown.symbol.beta == pytest.approx(0.825)
        assert grown.delta == pytest.approx(0.825 / 4)
        assert grown.step_index == 1

    def test_fibonacci_triple_alone(self) -> None:
        """Test that a single (2, 1) triple grows nothing."""
        state = LedgerState.initial(SeparationSymbol(0.8))
        triple: CombTriple = fibonacci_sequence(1)[0]
        grown = step_growth(state, triple, eta_config=0.1)
        assert grown.rule_fired is GrowthRule.NONE
        assert grown.symbol.beta == 0.8

    def test_negative_eta(self) -> None:
        """Test that the Fibonacci growth is nonnegative."""
        state = LedgerState.initial(SeparationSymbol(0.8))
        with pytest.raises(ValueError, match="eta_config"):
            step_growth(state, fibonacci_sequence(1)[0], eta_config=-1.0)


class TestRunLedger:
    """Tests for ledger trajectories."""

    def test_row_count(self) -> None:
        """Test one row per level."""
        rows = run_ledger(fibonacci_sequence(5), tau=0.5)
        assert len(rows) == 6
        assert [row.step for row in rows] == [1, 2, 3, 4, 5, 6]
        assert rows[0].mu_lower == 0.5

    def test_fibonacci_growth_fires_once(self) -> None:
        """Test the delayed growth after the first type-B level."""
        rows = run_ledger(fibonacci_sequence(4), tau=0.5)
        fired = [row.rule_fired for row in rows]
        assert fired == [GrowthRule.NONE] * 4 + [GrowthRule.FIBONACCI_ETA]
        assert rows[4].beta == pytest.approx(rows[3].beta + rows[0].beta / 32)

    def test_explicit_eta(self) -> None:
        """Test a configured Fibonacci growth."""
        rows = run_ledger(fibonacci_sequence(4), tau=0.5, eta_config=0.01)
        assert rows[4].beta == pytest.approx(rows[3].beta + 0.01)

    def test_stationary_geometric_growth(self) -> None:
        """Test beta_n = beta_0 (33/32)^n along stationary (3, 2)."""
        rows = run_ledger(parse_sequence(";".join(["C-,3,2"] * 10)), tau=0.5)
        beta0 = rows[0].beta
        for n, row in enumerate(rows):
            assert row.beta == pytest.approx(beta0 * (33 / 32) ** n)
        assert all(row.rule_fired is GrowthRule.LONG_POSTCRITICAL for row in rows[1:])

    def test_zero_tau(self) -> None:
        """Test that tau = 0 keeps every row at zero."""
        rows = run_ledger(fibonacci_sequence(10), tau=0.0)
        assert all(row.beta == 0 and row.mu_lower == 0 for row in rows)

    def test_negative_tau(self) -> None:
        """Test that tau is nonnegative."""
        with pytest.raises(ValueError, match="tau"):
            run_ledger(fibonacci_sequence(2), tau=-1.0)

    def test_random_sequences(self, rng: np.random.Generator) -> None:
        """Test the lower bound and the seven-step growth on random sequences."""
        for _ in range(50):
            _check_ledger(random_admissible_sequence(rng, 70))

    def test_seven_step_window(self) -> None:
        """Test the window bound where it is tight along the Fibonacci sequence."""
        _check_ledger(fibonacci_sequence(70))

    @pytest.mark.slow
    def test_random_sequences_full_size(self) -> None:
        """Test the same bounds on a thousand random sequences of length 70."""
        rng = np.random.default_rng(7)
        for _ in range(1000):
            _check_ledger(random_admissible_sequence(rng, 70))


class TestGrowthConstant:
    """Tests for the least-squares growth rate."""

    def test_positive_for_long_returns(self) -> None:
        """Test a positive slope along stationary (3, 2)."""
        rows = run_ledger(parse_sequence(";".join(["C-,3,2"] * 20)), tau=0.5)
        assert growth_constant(rows) > 0

    def test_zero_for_zero_tau(self) -> None:
        """Test a flat trajectory."""
        rows = run_ledger(fibonacci_sequence(6), tau=0.0)
        assert growth_constant(rows) == pytest.approx(0.0)

    def test_too_few_rows(self) -> None:
        """Test that one row has no slope."""
        with pytest.raises(ValueError, match="two rows"):
            growth_constant(run_ledger(fibonacci_sequence(1), tau=0.5)[:1])
