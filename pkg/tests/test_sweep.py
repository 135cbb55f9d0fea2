"""Grid sweeps: determinism, closed-form rows, and parallel equality."""

import numpy as np
import pytest

import lzs_sim.sweep as sweep_mod
from lzs_sim import (
    DriveParams,
    NonConvergent,
    QubitModel,
    RateKernelParams,
    SweepGrid,
    ValidationError,
    build_rate_matrix,
    lzs_rate,
    run_frequency_batch,
    run_sweep,
    stationary_solve,
)

TWO_STATE = QubitModel(
    left_offsets=(0.0,),
    right_offsets=(0.0,),
    crossings=np.array([[0.05]]),
    left_to_right=np.array([[0.01]]),
)
DRIVE = DriveParams(amplitude=0.0, frequency=1.0, dephasing=0.1)


class TestSweepGrid:
    def test_axes_are_inclusive_linspaces(self):
        g = SweepGrid(-1.0, 1.0, 5, 0.0, 2.0, 3)
        assert list(g.eps_values) == [-1.0, -0.5, 0.0, 0.5, 1.0]
        assert list(g.amp_values) == [0.0, 1.0, 2.0]
        assert g.shape == (3, 5)

    def test_validation(self):
        with pytest.raises(ValidationError):
            SweepGrid(0.0, 1.0, 1, 0.0, 1.0, 3)
        with pytest.raises(ValidationError):
            SweepGrid(1.0, 1.0, 3, 0.0, 1.0, 3)
        with pytest.raises(ValidationError):
            SweepGrid(0.0, 1.0, 3, 1.0, 0.5, 3)
        with pytest.raises(ValidationError):
            SweepGrid(0.0, 1.0, 3, -1.0, 1.0, 3)
        with pytest.raises(ValidationError):
            SweepGrid(0.0, np.nan, 3, 0.0, 1.0, 3)


class TestRunSweep:
    def test_matches_pointwise_solves(self):
        grid = SweepGrid(-1.5, 1.5, 7, 0.0, 2.0, 4)
        pmap = run_sweep(TWO_STATE, DRIVE, grid)
        for k, amp in enumerate(grid.amp_values):
            drive = DriveParams(
                amplitude=float(amp), frequency=1.0, dephasing=0.1
            )
            for m, eps in enumerate(grid.eps_values):
                p = stationary_solve(
                    build_rate_matrix(TWO_STATE, float(eps), drive)
                )
                assert pmap.values[k, m] == p.p_left

    def test_zero_coupling_keeps_initial_state(self):
        model = QubitModel(
            left_offsets=(0.0,),
            right_offsets=(0.0,),
            crossings=np.zeros((1, 1)),
        )
        pmap = run_sweep(model, DRIVE, SweepGrid(-1.0, 1.0, 2, 0.0, 1.0, 2))
        assert np.all(pmap.values == 0.0)  # everything stays in 0R

    def test_static_row_is_single_lorentzian_balance(self):
        grid = SweepGrid(-2.0, 2.0, 9, 0.0, 1.0, 2)
        pmap = run_sweep(TWO_STATE, DRIVE, grid)
        for m, eps in enumerate(grid.eps_values):
            w = lzs_rate(0.05, float(eps), DRIVE)
            expected = w / (2 * w + 0.01)
            assert pmap.values[0, m] == pytest.approx(expected, rel=1e-10)

    def test_values_within_unit_interval(self):
        pmap = run_sweep(TWO_STATE, DRIVE, SweepGrid(-3.0, 3.0, 11, 0.0, 4.0, 5))
        assert np.all(pmap.values >= 0.0)
        assert np.all(pmap.values <= 1.0)

    def test_repeated_runs_bit_identical(self):
        grid = SweepGrid(-2.0, 2.0, 9, 0.0, 3.0, 5)
        a = run_sweep(TWO_STATE, DRIVE, grid)
        b = run_sweep(TWO_STATE, DRIVE, grid)
        assert np.array_equal(a.values, b.values)

    @pytest.mark.parametrize("workers", [2, 4])
    def test_worker_count_does_not_change_bits(self, workers):
        grid = SweepGrid(-1.0, 1.0, 7, 0.0, 2.0, 4)
        serial = run_sweep(TWO_STATE, DRIVE, grid, workers=1)
        parallel = run_sweep(TWO_STATE, DRIVE, grid, workers=workers)
        assert np.array_equal(serial.values, parallel.values)

    def test_workers_validation(self):
        grid = SweepGrid(-1.0, 1.0, 3, 0.0, 1.0, 2)
        with pytest.raises(ValidationError):
            run_sweep(TWO_STATE, DRIVE, grid, workers=0)

    def test_nonconvergent_carries_coordinates(self, monkeypatch):
        grid = SweepGrid(-1.0, 1.0, 3, 0.0, 2.0, 3)

        def explode(matrix):
            raise NonConvergent("forced failure")

        monkeypatch.setattr(sweep_mod, "stationary_solve", explode)
        with pytest.raises(NonConvergent) as err:
            run_sweep(TWO_STATE, DRIVE, grid)
        assert err.value.eps == -1.0
        assert err.value.amp == 0.0
        assert "eps=-1.0" in str(err.value)

    def test_fingerprint_tracks_physics_not_grid(self):
        a = run_sweep(TWO_STATE, DRIVE, SweepGrid(-1.0, 1.0, 3, 0.0, 1.0, 2))
        b = run_sweep(TWO_STATE, DRIVE, SweepGrid(-2.0, 2.0, 5, 0.0, 2.0, 3))
        assert a.fingerprint == b.fingerprint
        other_drive = DriveParams(amplitude=0.0, frequency=2.0, dephasing=0.1)
        c = run_sweep(TWO_STATE, other_drive, SweepGrid(-1.0, 1.0, 3, 0.0, 1.0, 2))
        assert a.fingerprint != c.fingerprint

    def test_kernel_params_respected(self):
        grid = SweepGrid(-1.0, 1.0, 5, 0.0, 1.0, 2)
        base = run_sweep(TWO_STATE, DRIVE, grid)
        tight = run_sweep(
            TWO_STATE, DRIVE, grid, kernel=RateKernelParams(lorentz_cutoff=0.5)
        )
        assert not np.array_equal(base.values, tight.values)


class TestFrequencyBatch:
    def test_single_entry_equals_run_sweep(self):
        grid = SweepGrid(-1.0, 1.0, 5, 0.0, 2.0, 3)
        (only,) = run_frequency_batch(TWO_STATE, [DRIVE], grid)
        direct = run_sweep(TWO_STATE, DRIVE, grid)
        assert np.array_equal(only.values, direct.values)

    def test_six_frequencies_give_six_maps(self):
        grid = SweepGrid(-1.0, 1.0, 3, 0.0, 1.0, 2)
        drives = [
            DriveParams(amplitude=0.0, frequency=f, dephasing=0.1)
            for f in (5.0, 8.0, 11.0, 13.0, 15.0, 17.0)
        ]
        maps = run_frequency_batch(TWO_STATE, drives, grid)
        assert [m.frequency for m in maps] == [5.0, 8.0, 11.0, 13.0, 15.0, 17.0]

    def test_duplicate_frequencies_identical(self):
        grid = SweepGrid(-1.0, 1.0, 5, 0.0, 2.0, 3)
        one, two = run_frequency_batch(TWO_STATE, [DRIVE, DRIVE], grid)
        assert np.array_equal(one.values, two.values)

    def test_empty_batch_rejected(self):
        with pytest.raises(ValidationError):
            run_frequency_batch(TWO_STATE, [], SweepGrid(-1, 1, 3, 0, 1, 2))
