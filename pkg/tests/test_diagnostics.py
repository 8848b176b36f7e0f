import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sipfpic.diagnostics import (EmpiricalRadialCDF, MetricsRecord, MetricsWriter,
                                 TabulatedRadialCDF, blowup_ratio, empirical_radial_cdf,
                                 fit_slope, mean_cylindrical_radius, metrics_record,
                                 read_metrics, second_moment, wasserstein1_radial)
from sipfpic.particles import ParticleEnsemble
from sipfpic.spectral import SpectralField

L = 8.0


def at_radii(radii, dim=3):
    x = np.zeros((len(radii), dim))
    x[:, 0] = radii
    return ParticleEnsemble(x, 1.0, L)


def test_empirical_cdf_examples():
    ens = at_radii([0.5, 1.0, 1.5, 2.0])
    assert empirical_radial_cdf(ens, 0.0) == 0.0
    assert empirical_radial_cdf(ens, 2.0) == 1.0
    assert empirical_radial_cdf(ens, 1.2) == 0.5


def test_empirical_cdf_monotone(rng):
    ens = ParticleEnsemble(rng.standard_normal((500, 3)), 1.0, L)
    r = np.linspace(0, 5, 400)
    assert np.all(np.diff(empirical_radial_cdf(ens, r)) >= 0)


def test_w1_identical_is_zero(rng):
    a = EmpiricalRadialCDF(ParticleEnsemble(rng.standard_normal((100, 3)), 1.0, L))
    assert wasserstein1_radial(a, a) == 0.0


def test_w1_point_masses():
    a = EmpiricalRadialCDF(radii=[1.0])
    b = EmpiricalRadialCDF(radii=[1.3])
    # level 0 maps both quantiles to r = 0, so one of n levels contributes nothing
    n = 10_000
    assert wasserstein1_radial(a, b, n_quantiles=n) == pytest.approx(0.3 * (n - 1) / n, abs=1e-12)


def test_w1_quantile_cap():
    a = EmpiricalRadialCDF(radii=[1.0])
    b = EmpiricalRadialCDF(radii=[80.0])
    n = 10_000
    assert wasserstein1_radial(a, b, n_quantiles=n) == pytest.approx(49.0 * (n - 1) / n, abs=1e-9)


def test_w1_histogram_reread(rng):
    radii = np.abs(rng.standard_normal(20_000)) + 0.1
    emp = EmpiricalRadialCDF(radii=radii)
    edges = np.linspace(0, radii.max() + 1e-9, 401)
    counts, _ = np.histogram(radii, bins=edges)
    tab = TabulatedRadialCDF(edges, np.concatenate([[0], np.cumsum(counts)]))
    assert wasserstein1_radial(emp, tab) <= edges[1] - edges[0]


def test_w1_callable_cdf():
    tab = TabulatedRadialCDF([0.0, 1.0, 2.0], [0.0, 0.5, 1.0])
    d_method = wasserstein1_radial(EmpiricalRadialCDF(radii=[0.7]), tab)
    d_callable = wasserstein1_radial(EmpiricalRadialCDF(radii=[0.7]), lambda r: tab(r))
    assert d_callable == pytest.approx(d_method, abs=1e-9)


def test_w1_non_monotone_rejected():
    with pytest.raises(ValueError):
        TabulatedRadialCDF([0.0, 1.0, 2.0], [0.0, 0.7, 0.5])


cdf_samples = st.lists(st.floats(0.0, 60.0, allow_nan=False), min_size=1, max_size=40)


@settings(max_examples=200, deadline=None)
@given(cdf_samples, cdf_samples, cdf_samples)
def test_w1_metric_properties(a, b, c):
    A, B, C = (EmpiricalRadialCDF(radii=v) for v in (a, b, c))
    ab = wasserstein1_radial(A, B, n_quantiles=500)
    assert abs(ab - wasserstein1_radial(B, A, n_quantiles=500)) <= 1e-12
    assert ab <= wasserstein1_radial(A, C, n_quantiles=500) + \
        wasserstein1_radial(C, B, n_quantiles=500) + 1e-12
    assert ab >= 0


def test_second_moment_examples(rng):
    assert second_moment(ParticleEnsemble(np.zeros((10, 3)), 5.0, L)) == 0.0
    one = ParticleEnsemble(np.array([[0.0, 2.0, 0.0]]), 10.0, L)
    assert second_moment(one) == pytest.approx(20.0)
    P = 100_000
    r = np.sqrt(rng.random(P))
    th = rng.uniform(0, 2 * np.pi, P)
    disk = ParticleEnsemble(np.column_stack([r * np.cos(th), r * np.sin(th)]), 3.0, L)
    # E|x|^2 = 1/2 on the unit disk, so M2 -> M0/4
    se = 3.0 / 2 * np.std(r**2) / np.sqrt(P)
    assert abs(second_moment(disk) - 3.0 / 4) <= 4 * se


def single_mode(H, q, amp=1.0):
    a = SpectralField.zeros(H, 3, L)
    a.coeffs[tuple(k % H for k in q)] += amp / 2
    a.coeffs[tuple(-k % H for k in q)] += amp / 2
    return a


def test_ratio_inside_lo_box():
    a = single_mode(64, (2, 1, 0))
    a.coeffs[0, 0, 0] = 1.0
    assert blowup_ratio(a) == pytest.approx(1.0, rel=1e-12)


def test_ratio_extra_mode_between_boxes():
    a = single_mode(64, (10, 0, 0), 0.5)
    a.coeffs[0, 0, 0] = 1.0
    assert blowup_ratio(a) > 1.0
    assert blowup_ratio(a) == pytest.approx(1.5, rel=1e-12)


def test_ratio_vanished_field():
    with pytest.raises(ZeroDivisionError, match="field vanished"):
        blowup_ratio(SpectralField.zeros(64, 3, L))


def test_ratio_bad_cutoffs():
    with pytest.raises(ValueError):
        blowup_ratio(SpectralField.zeros(16, 3, L), 8, 32)


def test_mean_cylindrical_radius():
    x = np.array([[3.0, 4.0, 1.0], [0.0, 1.0, -2.0]])
    assert mean_cylindrical_radius(x) == pytest.approx(3.0)
    assert mean_cylindrical_radius(ParticleEnsemble(x, 1.0, L)) == pytest.approx(3.0)


def test_metrics_record_and_csv(tmp_path):
    a = single_mode(32, (1, 0, 0))
    a.coeffs[0, 0, 0] = 2.0
    ens = at_radii([0.5, 1.0])
    rec = metrics_record(7, 0.5e-3, ens, a, reference=EmpiricalRadialCDF(radii=[0.5, 1.0]))
    assert rec.time == 7 * 0.5e-3
    assert rec.blowup_ratio == pytest.approx(rec.sup_c_hi / rec.sup_c_lo)
    assert rec.w1_error == 0.0
    with MetricsWriter(tmp_path / "m.csv", with_w1=True) as w:
        w.write(rec)
        w.write(MetricsRecord(8, 8 * 0.5e-3, 1.0, 1.0, 1.0, 1.0))
    lines = (tmp_path / "m.csv").read_text().splitlines()
    assert lines[0] == "step,time,M2,sup_c_lo,sup_c_hi,blowup_ratio,w1_error"
    rows = read_metrics(tmp_path / "m.csv")
    assert rows[0]["time"] == 7 * 0.5e-3 and rows[1]["w1_error"] is None


def test_fit_slope():
    t = np.linspace(0, 1, 11)
    assert fit_slope(t, 3 * t - 2) == pytest.approx(3.0)
