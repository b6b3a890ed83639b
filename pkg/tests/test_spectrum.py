import math

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh

from collarspec.metric import CollarConfig, FiberSpectrum, make_profile, max_rho, sl_coefficients
from collarspec.spectrum import (channel_ladder, collar_count, collar_spectrum,
                                 essential_spectrum_bottom, perp_ladder, perp_spectrum)
from collarspec.sturm import BC, _fd_matrices, count_eigenvalues, kth_eigenvalue, matrix_oracle

MU1 = (2 * math.pi) ** 2


def test_mode_cutoff_keeps_only_constant_mode(hyperbolic):
    spec = collar_spectrum(hyperbolic, 0.1, 4.0)
    assert [ch.mode for ch in spec.channels] == [0]
    assert spec.skipped_from == pytest.approx(4.0 * (1.01), rel=1e-9)
    mu1 = kth_eigenvalue(sl_coefficients(hyperbolic, 0.1, MU1), 1)
    assert mu1 > 4.0


def test_constant_mode_count_matches_oracle(hyperbolic):
    sl = sl_coefficients(hyperbolic, 0.1, 0.0)
    oracle = int(np.sum(matrix_oracle(sl, 4000) <= 4.0))
    assert collar_count(hyperbolic, 0.1, 4.0) == oracle == count_eigenvalues(sl, 4.0)


def test_count_additivity_and_merge(hyperbolic):
    spec = collar_spectrum(hyperbolic, 0.05, 120.0, rtol=1e-11)
    assert spec.total == sum(ch.multiplicity * len(ch.eigenvalues) for ch in spec.channels)
    assert spec.total == len(spec.merged) == collar_count(hyperbolic, 0.05, 120.0)
    keys = [(e.lam, e.mode, e.index) for e in spec.merged]
    assert keys == sorted(keys)
    # every mu_1 value appears twice (cos and sin modes)
    mu1_entries = [e for e in spec.merged if e.mode == 1]
    assert len(mu1_entries) % 2 == 0 and mu1_entries


def test_dirichlet_below_neumann_per_mode(hyperbolic):
    for eps in (0.1, 0.01):
        for lam in (4.0, 60.0):
            nd = collar_spectrum(hyperbolic, eps, lam, BC.DIRICHLET)
            nn = collar_spectrum(hyperbolic, eps, lam, BC.NEUMANN)
            dn = {ch.mode: len(ch.eigenvalues) for ch in nn.channels}
            for ch in nd.channels:
                assert len(ch.eigenvalues) <= dn[ch.mode] <= len(ch.eigenvalues) + 2
            assert nd.total <= nn.total


def test_perp_excludes_constant_mode(hyperbolic):
    full = collar_spectrum(hyperbolic, 0.05, 60.0)
    perp = perp_spectrum(hyperbolic, 0.05, 60.0)
    const = sum(len(ch.eigenvalues) for ch in full.channels if ch.mode == 0)
    assert perp.total == full.total - const
    assert all(e.mode > 0 for e in perp.merged)


def test_perp_empty_below_ground_bound(hyperbolic):
    bound = MU1 * max_rho(hyperbolic, 0.1) ** -2
    assert perp_spectrum(hyperbolic, 0.1, 0.99 * bound).total == 0


def test_perp_at_eps_zero_is_finite(hyperbolic):
    spec = perp_spectrum(hyperbolic, 0.0, 160.0, t_cut=1e-3)
    vals = spec.values()
    assert 0 < spec.total < 20
    assert np.all(vals > 0)
    # both cusp sides carry 95.68 and 155.21 in each of the two mu_1 modes
    assert vals[:4] == pytest.approx([95.678868946] * 4, abs=1e-6)


def test_channel_and_perp_ladder(hyperbolic):
    lad = channel_ladder(hyperbolic, 0.01, MU1, 2, tol=1e-9, rtol=1e-11)
    perp = perp_ladder(hyperbolic, 0.01, 4, tol=1e-9, rtol=1e-11)
    assert [v for v, _ in perp] == pytest.approx([lad[0], lad[0], lad[1], lad[1]],
                                                 abs=1e-7)


def test_essential_spectrum_classification(hyperbolic):
    ess = essential_spectrum_bottom(hyperbolic)
    assert ess.bottom == 0.25 and ess.regime == "marginally complete"
    steep = CollarConfig(-2, 1, 1, (-1, 1), make_profile("hyperbolic"),
                         FiberSpectrum.circle())
    assert essential_spectrum_bottom(steep).bottom == 0.0
    pair = CollarConfig(-1, 1, 2, (-1, 1), make_profile("linear-pair", (2.0, 1.0)),
                        FiberSpectrum.flat_torus((1.0, 1.0)))
    ess = essential_spectrum_bottom(pair)
    assert ess.bottom == 1.0 and ess.sides == (4.0, 1.0)


def _periodic_laplacian(n, length=1.0):
    h = length / n
    main = np.full(n, 2.0 / h ** 2)
    off = np.full(n - 1, -1.0 / h ** 2)
    lap = sp.diags([off, main, off], [-1, 0, 1], format="lil")
    lap[0, n - 1] = lap[n - 1, 0] = -1.0 / h ** 2
    return lap.tocsr()


def _two_d_eigs(config, eps, n_r, lap, k):
    d0, e0, _, _, _ = _fd_matrices(sl_coefficients(config, eps, 0.0), n_r)
    d1, _, _, _, _ = _fd_matrices(sl_coefficients(config, eps, 1.0), n_r)
    radial = sp.diags([e0, d0, e0], [-1, 0, 1])
    fiber_weight = sp.diags(d1 - d0)
    big = (sp.kron(radial, sp.identity(lap.shape[0])) + sp.kron(fiber_weight, lap)).tocsc()
    return np.sort(eigsh(big, k=k, sigma=-1.0, which="LM", return_eigenvectors=False))


def test_two_dimensional_direct_sum(hyperbolic):
    """A 2-D finite-difference Laplacian on the collar with a discretised
    circle equals the direct sum of radial channels with the discrete fiber
    eigenvalues; the channel solver reproduces its spectrum."""
    eps, n_r, n_th, lam_max = 0.1, 2000, 6, 60.0
    lap = _periodic_laplacian(n_th)
    mus_h = np.sort(np.linalg.eigvalsh(lap.toarray()))
    coarse = _two_d_eigs(hyperbolic, eps, n_r, lap, 30)
    # direct sum of discrete channels
    chans = np.sort(np.concatenate([matrix_oracle(sl_coefficients(hyperbolic, eps, m), n_r)
                                    for m in mus_h]))
    assert coarse == pytest.approx(chans[:coarse.size], rel=1e-10)
    fine = _two_d_eigs(hyperbolic, eps, 2 * n_r, lap, 30)
    two_d = (4 * fine - coarse) / 3
    two_d = two_d[two_d <= lam_max]
    # assembled spectrum with the discrete fiber eigenvalues as an explicit list
    distinct, mult = [], []
    for m in mus_h:
        if distinct and abs(m - distinct[-1]) < 1e-8 * max(1.0, m):
            mult[-1] += 1
        else:
            distinct.append(float(m))
            mult.append(1)
    distinct[0] = 0.0
    cfg = CollarConfig(-1, 1, 1, (-1, 1), make_profile("hyperbolic"),
                       FiberSpectrum.explicit(list(zip(distinct, mult)), mu_limit=1e6))
    spec = collar_spectrum(cfg, eps, lam_max, rtol=1e-11)
    assert spec.total == two_d.size
    assert spec.values() == pytest.approx(two_d, rel=1e-6)
