import numpy as np
import pytest

from beamthin.array_model import (AngularGrid, ArrayGeometry, PowerPattern, WeightTensor,
                                  array_factor, array_pattern, steering_phase,
                                  steering_weights, unit_cell_power)
from beamthin.bessel import j1

G16 = ArrayGeometry()


def direct_power(weights, geometry, theta, phi):
    """Plain double loop over elements, origin at element (0, 0)."""
    u = np.sin(np.deg2rad(theta)) * np.cos(np.deg2rad(phi))
    v = np.sin(np.deg2rad(theta)) * np.sin(np.deg2rad(phi))
    af = np.zeros(np.shape(theta), dtype=complex)
    for m in range(geometry.rows):
        for n in range(geometry.cols):
            af += weights[m, n] * np.exp(2j * np.pi * (m * geometry.spacing_x * u
                                                       + n * geometry.spacing_y * v))
    x = 2 * np.pi * geometry.aperture_radius * np.sin(np.deg2rad(theta))
    with np.errstate(invalid="ignore", divide="ignore"):
        env = np.where(x == 0, 1.0, 2 * j1(x) / np.where(x == 0, 1.0, x))
    return np.abs(af) ** 2 * env ** 2


class TestGeometry:
    def test_defaults(self):
        assert G16.shape == (16, 16)
        assert G16.n_elements == 256
        assert G16.wavelength == pytest.approx(299_792_458 / 28e9)
        assert G16.wavenumber == pytest.approx(2 * np.pi / G16.wavelength)

    @pytest.mark.parametrize("kwargs", [dict(rows=0), dict(cols=0), dict(spacing_x=0),
                                        dict(spacing_y=-1), dict(aperture_radius=0)])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            ArrayGeometry(**kwargs)

    def test_from_frequency(self):
        with pytest.raises(ValueError):
            ArrayGeometry.from_frequency(0.0)
        assert ArrayGeometry.from_frequency(28e9) == G16


class TestUnitCell:
    def test_boresight_is_maximum_and_phi_free(self):
        assert unit_cell_power(0.0, 0.0, G16) == 1.0
        assert unit_cell_power(0.0, 90.0, G16) == unit_cell_power(0.0, 0.0, G16)
        th = np.linspace(0, 90, 91)
        assert np.all(unit_cell_power(th, 0.0, G16) <= 1.0)

    def test_horizon_value(self):
        assert unit_cell_power(90.0, 0.0, G16) == pytest.approx(0.381, abs=1e-3)

    def test_phi_independent(self):
        th = np.linspace(0, 90, 37)
        np.testing.assert_array_equal(unit_cell_power(th, 0.0, G16),
                                      unit_cell_power(th, 123.0, G16))

    @pytest.mark.parametrize("theta", [-0.1, 90.01, 180.0])
    def test_domain(self, theta):
        with pytest.raises(ValueError):
            unit_cell_power(theta, 0.0, G16)


class TestSteering:
    def test_broadside_zero(self):
        m, n = np.indices(G16.shape)
        assert np.all(steering_phase(m, n, 0.0, 37.0, G16) == 0.0)

    def test_substitution(self):
        assert steering_phase(1, 0, 30.0, 0.0, G16) == pytest.approx(-0.6 * np.pi)
        assert steering_phase(0, 2, 30.0, 90.0, G16) == pytest.approx(-1.2 * np.pi)

    def test_index_bounds(self):
        with pytest.raises(IndexError):
            steering_phase(16, 0, 10.0, 0.0, G16)
        with pytest.raises(IndexError):
            steering_phase(0, -1, 10.0, 0.0, G16)

    def test_weights_shape_checked(self):
        with pytest.raises(ValueError):
            steering_weights(np.ones((4, 4)), 0.0, 0.0, G16)


class TestArrayPattern:
    def test_matches_direct_double_loop(self):
        g = ArrayGeometry(rows=4, cols=4)
        rng = np.random.default_rng(3)
        mask = (rng.random((4, 4)) < 0.7).astype(float)
        mask[0, 0] = 1
        w = steering_weights(mask, 20.0, 40.0, g)
        grid = AngularGrid.uniform(2.0, 10.0)
        pat = array_pattern(w, g, grid)
        th, ph = grid.mesh()
        ref = direct_power(w, g, th, ph)
        ref /= ref.max()
        np.testing.assert_allclose(pat.values, ref, rtol=1e-10, atol=1e-14)

    @pytest.mark.parametrize("pos", [(0, 0), (7, 3), (15, 15)])
    def test_single_element_equals_unit_cell(self, pos):
        mask = np.zeros(G16.shape)
        mask[pos] = 1
        w = steering_weights(mask, 15.0, 200.0, G16)
        grid = AngularGrid.uniform(0.5, 5.0)
        pat = array_pattern(w, G16, grid)
        th, ph = grid.mesh()
        cell = unit_cell_power(th, ph, G16)
        np.testing.assert_allclose(pat.values, cell / cell.max(), rtol=0, atol=1e-12)

    def test_normalisation(self):
        rng = np.random.default_rng(0)
        w = steering_weights((rng.random(G16.shape) < 0.5), 10.0, 60.0, G16)
        pat = array_pattern(w, G16, AngularGrid.uniform(0.5, 2.0))
        assert pat.values.max() == 1.0
        assert pat.values.min() >= 0.0

    def test_no_active_elements(self):
        with pytest.raises(ValueError, match="no active elements"):
            array_pattern(np.zeros(G16.shape), G16, AngularGrid.uniform(1.0, 10.0))

    def test_rotational_symmetry(self):
        rng = np.random.default_rng(5)
        half = (rng.random((8, 16)) < 0.5).astype(float)
        mask = np.vstack([half, half[::-1, ::-1]])
        grid = AngularGrid.uniform(0.5, 1.0)
        pat = array_pattern(mask.astype(complex), G16, grid)
        np.testing.assert_allclose(pat.values, np.roll(pat.values, -180, axis=1),
                                   rtol=1e-9, atol=1e-12)

    @pytest.mark.parametrize("theta0,phi0", [(0.0, 0.0), (10.0, 60.0), (25.0, 300.0),
                                             (30.0, 135.0)])
    def test_peak_follows_steering(self, theta0, phi0):
        grid = AngularGrid.uniform(0.1, 1.0, theta_max=40.0)
        w = steering_weights(np.ones(G16.shape), theta0, phi0, G16)
        pat = array_pattern(w, G16, grid)
        assert abs(pat.peak[0] - theta0) <= grid.theta_step + 1e-9
        if theta0 > 0:
            dphi = (pat.peak[1] - phi0 + 180.0) % 360.0 - 180.0
            assert abs(dphi) <= grid.phi_step + 1e-9

    def test_broadside_full_array_is_real(self):
        th = np.array([5.0, 20.0, 40.0, 70.0])
        for phi in (0.0, 90.0, 180.0, 270.0):
            af = array_factor(np.ones(G16.shape), G16, th, phi)
            assert np.all(np.abs(af.imag) <= 1e-12 * np.maximum(np.abs(af), 1.0))

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            AngularGrid.uniform(0.0, 1.0)
        with pytest.raises(ValueError):
            AngularGrid.uniform(0.1, 7.0)
        grid = AngularGrid.uniform(1.0, 10.0)
        with pytest.raises(ValueError):
            PowerPattern(grid, np.zeros((3, 3)))
        with pytest.raises(ValueError, match="forward hemisphere"):
            array_pattern(np.ones(G16.shape), G16, AngularGrid.uniform(1.0, 10.0, 180.0))


class TestWeightTensor:
    def test_from_masks_uses_steering_phase(self):
        rng = np.random.default_rng(1)
        masks = (rng.random((3, 16, 16)) < 0.5).astype(np.int8)
        dirs = [(0.0, 0.0), (10.0, 60.0), (10.0, 120.0)]
        wt = WeightTensor.from_masks(masks, dirs, G16)
        assert wt.n_beams == 3
        np.testing.assert_array_equal(wt.masks, masks)
        m, n = np.indices(G16.shape)
        for b, (t, p) in enumerate(dirs):
            expected = np.exp(1j * steering_phase(m, n, t, p, G16))
            on = masks[b] == 1
            np.testing.assert_allclose(wt.weights[b][on], expected[on])

    def test_rejects_tapered_amplitudes(self):
        with pytest.raises(ValueError):
            WeightTensor(np.full((1, 2, 2), 0.5))
        with pytest.raises(ValueError):
            WeightTensor(np.ones((2, 2)))

    def test_direction_count(self):
        with pytest.raises(ValueError):
            WeightTensor.from_masks(np.ones((2, 16, 16)), [(0.0, 0.0)], G16)
