import io
import math

import numpy as np
import pytest

from scalewin import (
    ArgumentError,
    Constant,
    ExponentialAffine,
    HurstExponent,
    NumericError,
    OutOfDomainError,
    ResolutionError,
    ScalingDensity,
    ScalingModel,
    Tabulated,
    TruncationError,
    default_grid,
    density_moment,
    density_to_csv,
    diffusion_local,
    diffusion_scaling_fn,
    load_tabulated_csv,
    ode_residual,
    scaling_density,
)


# ---------------------------------------------------------------------------
# HurstExponent
# ---------------------------------------------------------------------------

def test_hurst_accepts_open_unit_interval():
    assert HurstExponent(0.35).value == 0.35
    assert HurstExponent(0.999).value == 0.999


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.2, 1.7, float("nan")])
def test_hurst_rejects_out_of_range(bad):
    with pytest.raises(ValueError):
        HurstExponent(bad)


# ---------------------------------------------------------------------------
# diffusion shapes
# ---------------------------------------------------------------------------

def test_constant_shape_is_flat():
    h = HurstExponent(0.35)
    u = np.linspace(-10, 10, 7)
    np.testing.assert_allclose(Constant(2.5).scaling_values(u, h), 2.5)


def test_affine_shape_grows_linearly_in_abs_u():
    h = HurstExponent(0.35)
    shape = ExponentialAffine(convention="eq34")
    u = np.array([-2.0, 0.0, 2.0])
    # 2H(1 + |u|): symmetric, value 2H at the origin
    np.testing.assert_allclose(shape.scaling_values(u, h), [2.1, 0.7, 2.1])


def test_affine_conventions_differ_by_constant_factor():
    h = HurstExponent(0.35)
    u = np.linspace(-3, 3, 11)
    a = ExponentialAffine(convention="eq34").scaling_values(u, h)
    b = ExponentialAffine(convention="fig2a").scaling_values(u, h)
    np.testing.assert_allclose(a, 2 * h.value * b)


def test_tabulated_interpolates_and_rejects_outside():
    shape = Tabulated(u=np.array([-1.0, 0.0, 1.0]), d=np.array([2.0, 1.0, 2.0]))
    h = HurstExponent(0.5)
    np.testing.assert_allclose(shape.scaling_values(np.array([0.5]), h), [1.5])
    with pytest.raises(OutOfDomainError):
        shape.scaling_values(np.array([1.5]), h)


def test_diffusion_scaling_fn_matches_shape():
    h = HurstExponent(0.35)
    shape = ExponentialAffine(convention="eq34")
    u = np.linspace(-4, 4, 9)
    np.testing.assert_allclose(diffusion_scaling_fn(shape, h, u), shape.scaling_values(u, h))


def test_diffusion_local_scales_time():
    # D(x, t) = t^(2H-1) D(x / t^H); for H = 1/2 the time factor drops out
    model = ScalingModel(HurstExponent(0.5), Constant(3.0))
    np.testing.assert_allclose(diffusion_local(model, np.array([1.0, -2.0]), 7.0), 3.0)
    # explicit value for H = 0.35 at t = 100: 100**(-0.3) * 2H(1+|u|)
    x, t = np.array([10.0]), 100.0
    u = x / t**0.35
    want = t ** (2 * 0.35 - 1) * 0.7 * (1 + abs(u[0]))
    model = ScalingModel(HurstExponent(0.35), ExponentialAffine(convention="eq34"))
    np.testing.assert_allclose(diffusion_local(model, x, t), [want])


def test_diffusion_local_needs_positive_time():
    model = ScalingModel(HurstExponent(0.5), Constant(1.0))
    with pytest.raises(ArgumentError):
        diffusion_local(model, np.array([0.0]), 0.0)


# ---------------------------------------------------------------------------
# scaling densities
# ---------------------------------------------------------------------------

def test_constant_shape_gives_gaussian_density():
    h = HurstExponent(0.35)
    d0 = 1.4
    density = scaling_density(Constant(d0), h)
    var = d0 / (2 * h.value)
    # closed form at a few points
    idx = [len(density.grid) // 2, len(density.grid) // 2 + 50]
    for i in idx:
        u = density.grid[i]
        want = math.exp(-u * u / (2 * var)) / math.sqrt(2 * math.pi * var)
        assert density.values[i] == pytest.approx(want, rel=1e-9)
    assert density_moment(density, 2) == pytest.approx(var, rel=1e-6)


def test_affine_shape_gives_double_exponential_density():
    h = HurstExponent(0.35)
    density = scaling_density(ExponentialAffine(convention="eq34"), h)
    mid = len(density.grid) // 2
    assert density.values[mid] == pytest.approx(0.5, rel=1e-4)
    u = density.grid[mid + 100]
    assert density.values[mid + 100] == pytest.approx(0.5 * math.exp(-u), rel=1e-4)
    assert density_moment(density, 2) == pytest.approx(2.0, rel=1e-4)
    assert density_moment(density, 4) == pytest.approx(24.0, rel=1e-4)


def test_double_exponential_density_is_h_independent():
    a = scaling_density(ExponentialAffine(convention="eq34"), HurstExponent(0.2))
    b = scaling_density(ExponentialAffine(convention="eq34"), HurstExponent(0.8))
    np.testing.assert_allclose(a.values, b.values, rtol=1e-9)


def test_unscaled_affine_shape_matches_quadrature_oracle():
    # For D(u) = 1 + |u| the stationary solution on u > 0 is
    # proportional to (1 + u)^(2H - 1) exp(-2 H u); check against that.
    h = HurstExponent(0.35)
    density = scaling_density(ExponentialAffine(convention="fig2a"), h)
    grid = density.grid
    pos = grid >= 0
    u = grid[pos]
    raw = (1 + u) ** (2 * h.value - 1) * np.exp(-2 * h.value * u)
    full = np.concatenate([raw[:0:-1], raw])  # symmetrize
    norm = np.trapezoid(full, grid)
    np.testing.assert_allclose(density.values[pos], raw / norm, rtol=1e-4)


def test_densities_are_normalized_and_nonnegative():
    for shape in (Constant(1.0), ExponentialAffine(convention="eq34"),
                  ExponentialAffine(convention="fig2a")):
        d = scaling_density(shape, HurstExponent(0.35))
        assert np.trapezoid(d.values, d.grid) == pytest.approx(1.0, abs=1e-9)
        assert np.all(d.values >= 0)


def test_density_constructor_rejects_unnormalized():
    grid = default_grid(5.0, 101)
    with pytest.raises(NumericError):
        ScalingDensity(grid=grid, values=np.ones_like(grid))


def test_narrow_grid_raises_truncation():
    with pytest.raises(TruncationError):
        scaling_density(Constant(50.0), HurstExponent(0.2), grid=default_grid(3.0, 301))


def test_default_grid_must_be_odd():
    with pytest.raises(ArgumentError):
        default_grid(10.0, 100)


# ---------------------------------------------------------------------------
# stationarity residual
# ---------------------------------------------------------------------------

def test_residual_small_for_closed_forms():
    h = HurstExponent(0.35)
    for shape in (Constant(1.0), ExponentialAffine(convention="eq34")):
        grid = np.linspace(-20, 20, 40001)  # step 1e-3
        density = scaling_density(shape, h, grid=grid)
        assert ode_residual(density, shape, h) < 1e-5


def test_residual_shrinks_with_grid_refinement():
    h = HurstExponent(0.35)
    shape = Constant(1.0)
    coarse = ode_residual(scaling_density(shape, h, grid=np.linspace(-20, 20, 20001)), shape, h)
    fine = ode_residual(scaling_density(shape, h, grid=np.linspace(-20, 20, 40001)), shape, h)
    assert fine < coarse / 3.5


def test_residual_large_for_mismatched_density():
    # Gaussian density against the affine shape: not a stationary solution
    h = HurstExponent(0.35)
    density = scaling_density(Constant(1.0), h, grid=np.linspace(-20, 20, 40001))
    mismatch = ode_residual(density, ExponentialAffine(convention="eq34"), h)
    assert mismatch > 1e-2


def test_residual_needs_enough_points():
    # hand-built triangular density on an 11-point grid: too coarse
    grid = np.linspace(-2.0, 2.0, 11)
    values = np.maximum(0.0, 1.0 - np.abs(grid) / 2.0)
    values /= np.trapezoid(values, grid)
    density = ScalingDensity(grid=grid, values=values)
    with pytest.raises(ResolutionError):
        ode_residual(density, Constant(1.0), HurstExponent(0.35))


# ---------------------------------------------------------------------------
# CSV round trips
# ---------------------------------------------------------------------------

def test_density_csv_round_trip(tmp_path):
    h = HurstExponent(0.4)
    density = scaling_density(Constant(1.0), h, grid=default_grid(10.0, 801))
    path = tmp_path / "density.csv"
    density_to_csv(density, path)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    np.testing.assert_array_equal(data[:, 0], density.grid)
    np.testing.assert_array_equal(data[:, 1], density.values)


def test_tabulated_csv_loader():
    text = "u,D\n-1,2\n0,1\n1,2\n"
    shape = load_tabulated_csv(io.StringIO(text))
    np.testing.assert_allclose(
        shape.scaling_values(np.array([-0.5, 0.5]), HurstExponent(0.5)), [1.5, 1.5]
    )
