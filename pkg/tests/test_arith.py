import math

import numpy as np
import pytest

from qadsim.arith import (
    ArithmeticGate,
    DomainError,
    FixedPointFormat,
    RangeError,
    a_gate,
    apply_arithmetic,
    ln_gate,
    reciprocal_scale_gate,
    square_gate,
    subtract_gate,
)
from qadsim.simcore import RegisterLayout, StateVector, new_state

FMT = FixedPointFormat(int_bits=2, frac_bits=3)  # 6-bit words keep tables small


class TestFixedPointFormat:
    def test_word_bits(self):
        assert FMT.word_bits == 6
        assert FixedPointFormat().word_bits == 25

    def test_roundtrip_exact_values(self):
        for v in (0.0, 1.0, -1.0, 2.875, -4.0, 3.875):
            assert FMT.decode(FMT.encode(v)) == v

    def test_round_half_even(self):
        # 0.0625 is exactly between grid points 0 and 0.125
        assert FMT.quantize(0.0625) == 0.0
        assert FMT.quantize(0.1875) == 0.25

    def test_overflow(self):
        with pytest.raises(RangeError):
            FMT.encode(4.0)
        with pytest.raises(RangeError):
            FMT.encode(-4.125)
        with pytest.raises(RangeError):
            FMT.encode(float("nan"))

    def test_two_complement_negative(self):
        word = FMT.encode(-0.125)
        assert word == (1 << 6) - 1  # all ones
        assert FMT.decode(word) == -0.125

    def test_resolution_bound(self):
        rng = np.random.default_rng(0)
        for v in rng.uniform(-3.5, 3.5, size=50):
            assert abs(FMT.quantize(v) - v) <= FMT.resolution / 2


def _run_gate(gate, layout, inputs):
    """Apply a gate to a basis state with the given register values (words)."""
    state = new_state(layout)
    label = 0
    for name, word in inputs.items():
        label = layout.replace(label, name, word)
    amps = np.zeros(layout.dim, dtype=complex)
    amps[label] = 1.0
    state = StateVector(layout, amps)
    apply_arithmetic(state, gate)
    out = int(np.argmax(np.abs(state.amps)))
    return {name: int(layout.extract(out, name)) for name in layout.names}


class TestGates:
    def test_subtract(self):
        lay = RegisterLayout([("a", 6), ("b", 6), ("r", 6)])
        gate = subtract_gate("a", "b", "r", FMT)
        out = _run_gate(gate, lay, {"a": FMT.encode(1.5), "b": FMT.encode(0.375)})
        assert FMT.decode(out["r"]) == 1.125

    def test_xor_write_involution(self):
        lay = RegisterLayout([("a", 6), ("r", 6)])
        gate = square_gate("a", "r", FMT)
        state = new_state(lay)
        label = lay.replace(0, "a", FMT.encode(1.25))
        amps = np.zeros(lay.dim, dtype=complex)
        amps[label] = 1.0
        state = StateVector(lay, amps)
        apply_arithmetic(state, gate)
        apply_arithmetic(state, gate)
        assert state.amps[label] == pytest.approx(1.0)

    def test_square_quantizes_result(self):
        lay = RegisterLayout([("a", 6), ("r", 6)])
        out = _run_gate(square_gate("a", "r", FMT), lay, {"a": FMT.encode(1.5)})
        assert FMT.decode(out["r"]) == 2.25

    def test_ln_gate(self):
        lay = RegisterLayout([("a", 6), ("r", 6)])
        out = _run_gate(ln_gate("a", "r", FMT), lay, {"a": FMT.encode(2.0)})
        assert FMT.decode(out["r"]) == pytest.approx(math.log(2.0), abs=FMT.resolution / 2)

    def test_ln_domain_error(self):
        lay = RegisterLayout([("a", 6), ("r", 6)])
        with pytest.raises(DomainError):
            _run_gate(ln_gate("a", "r", FMT), lay, {"a": FMT.encode(0.0)})

    def test_reciprocal_scale(self):
        lay = RegisterLayout([("n", 6), ("d", 6), ("r", 6)])
        gate = reciprocal_scale_gate("n", "d", "r", scale=2.0, fmt=FMT)
        out = _run_gate(gate, lay, {"n": FMT.encode(3.0), "d": FMT.encode(0.75)})
        assert FMT.decode(out["r"]) == 2.0

    def test_reciprocal_divisor_floor(self):
        lay = RegisterLayout([("n", 6), ("d", 6), ("r", 6)])
        gate = reciprocal_scale_gate("n", "d", "r", scale=1.0, fmt=FMT)
        with pytest.raises(DomainError):
            _run_gate(gate, lay, {"n": FMT.encode(1.0), "d": FMT.encode(0.0)})

    def test_a_gate_recovers_overlap(self):
        # angle 1/4 (as a fraction of pi) encodes overlap 2 sin^2(pi/4) - 1 = 0
        lay = RegisterLayout([("a", 6), ("r", 6)])
        out = _run_gate(a_gate("a", "r", scale=2.0, fmt=FMT), lay, {"a": FMT.encode(0.25)})
        assert FMT.decode(out["r"]) == pytest.approx(0.0, abs=FMT.resolution / 2)

    def test_result_overflow_raises(self):
        lay = RegisterLayout([("a", 6), ("r", 6)])
        with pytest.raises(RangeError):
            _run_gate(square_gate("a", "r", FMT), lay, {"a": FMT.encode(2.5)})

    def test_target_overlapping_sources_rejected(self):
        gate = ArithmeticGate("bad", ("a",), "a", lambda x: x, (FMT,), FMT)
        lay = RegisterLayout([("a", 6)])
        with pytest.raises(ValueError):
            apply_arithmetic(new_state(lay), gate)
