r"""Unsupervised training losses and their gradients.

Two losses train the unrolled network without clean targets:

- a structural-similarity loss :math:`1 - \mathrm{SSIM}(\mathcal{R}^{-1}
  z, y)` comparing the image reconstructed from the last pre-proximal grid
  :math:`z` with the observed image :math:`y`;
- a Neighbor2Neighbor loss, which splits the input sinogram into two
  half-resolution sub-grids of neighbouring cells, asks the network to map
  one onto the other, and regularizes the mapping with the same split of
  the full-resolution output.

SSIM windows are 11 x 11 Gaussians with :math:`\sigma = 1.5`, and the mean
is taken over window centers whose window lies inside the image.
"""

from __future__ import division
from __future__ import unicode_literals

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from luslines.ducps import _unrolled_backward, _unrolled_forward
from luslines.errors import DimensionError, ParameterError
from luslines.images import Image, Sinogram
from luslines.radon import _reconstruct, _reconstruct_adjoint, _project

__docformat__ = 'restructuredtext'

__all__ = ["ssim", "ssim_loss_and_grad", "SubsamplePair",
           "neighbor_subsample", "n2n_target", "n2n_loss_and_grads"]

_SIGMA = 1.5
_TRUNCATE = 3.5
_RADIUS = 5
_C1 = 0.01**2
_C2 = 0.03**2

# ordered pairs of adjacent cells in a 2 x 2 block numbered 0 1 / 2 3
_ADJACENT_PAIRS = np.array([[0, 1], [1, 0], [0, 2], [2, 0],
                            [1, 3], [3, 1], [2, 3], [3, 2]])


def _window(x):
    return ndimage.gaussian_filter(x, sigma=_SIGMA, truncate=_TRUNCATE,
                                   mode='constant', cval=0.)


def _interior(shape):
    if shape[0] <= 2 * _RADIUS or shape[1] <= 2 * _RADIUS:
        raise DimensionError("SSIM needs images larger than {0}x{0}, got "
                             "{1}x{2}".format(2 * _RADIUS, *shape))
    mask = np.zeros(shape, dtype=bool)
    mask[_RADIUS:-_RADIUS, _RADIUS:-_RADIUS] = True
    return mask


def _pixels(img):
    return img.pixels if isinstance(img, Image) else np.asarray(img, float)


def _ssim_terms(a, b):
    mu_a, mu_b = _window(a), _window(b)
    m_aa, m_bb, m_ab = _window(a * a), _window(b * b), _window(a * b)
    A1 = 2 * mu_a * mu_b + _C1
    A2 = 2 * (m_ab - mu_a * mu_b) + _C2
    B1 = mu_a * mu_a + mu_b * mu_b + _C1
    B2 = (m_aa - mu_a * mu_a) + (m_bb - mu_b * mu_b) + _C2
    S = A1 * A2 / (B1 * B2)
    return S, (mu_a, mu_b, A1, A2, B1, B2)


def ssim(a, b):
    r"""Mean structural similarity of two images in [0, 1].

    Examples
    --------
    >>> rng = np.random.default_rng(0)
    >>> a = rng.random((32, 32))
    >>> print(ssim(a, a))
    1.0
    >>> binary = (rng.random((32, 32)) > 0.5).astype(float)
    >>> print(ssim(binary, 1. - binary) < 0)
    True

    Constant images follow the closed form of the luminance term.

    >>> c = np.full((32, 32), 0.3)
    >>> expected = (2 * 0.3 * 0.4 + 1e-4) / (0.3**2 + 0.4**2 + 1e-4)
    >>> print(abs(ssim(c, c + 0.1) - expected) <= 1e-9)
    True
    >>> ssim(a, a[:, :20])
    Traceback (most recent call last):
    ...
    luslines.errors.DimensionError: cannot compare 32x32 and 32x20 images
    """
    a, b = _pixels(a), _pixels(b)
    if a.shape != b.shape:
        raise DimensionError("cannot compare {}x{} and {}x{} images"
                             .format(a.shape[0], a.shape[1],
                                     b.shape[0], b.shape[1]))
    mask = _interior(a.shape)
    S, _ = _ssim_terms(a, b)
    return float(S[mask].mean())


def _ssim_grad(a, b):
    """SSIM of `a` against `b` and its gradient with respect to `a`."""
    mask = _interior(a.shape)
    S, (mu_a, mu_b, A1, A2, B1, B2) = _ssim_terms(a, b)
    weight = mask / mask.sum()

    dS_dmu_a = S * (2 * mu_b / A1 - 2 * mu_b / A2
                    - 2 * mu_a / B1 + 2 * mu_a / B2)
    dS_dm_aa = -S / B2
    dS_dm_ab = 2 * S / A2

    # the zero-padded Gaussian filter is its own transpose
    grad = (_window(weight * dS_dmu_a)
            + 2 * a * _window(weight * dS_dm_aa)
            + b * _window(weight * dS_dm_ab))
    return float(S[mask].mean()), grad


def ssim_loss_and_grad(z_k, y, adjoint="exact"):
    r"""SSIM loss of the reconstruction of `z_k` and its gradient.

    Parameters
    ----------
    z_k : :class:`~luslines.images.Sinogram`
        Pre-proximal grid of the last layer.
    y : :class:`~luslines.images.Image`
        Observed image.
    adjoint : {"exact", "surrogate"}
        Transpose of the inverse transform used to bring the image-domain
        gradient back to the Radon domain: the exact transpose of the
        filtered back-projection (default), or the forward projection.

    Returns
    -------
    loss : float
        :math:`1 - \mathrm{SSIM}(\mathcal{R}^{-1} z_k, y)`.
    dL_dz : :class:`~luslines.images.Sinogram`

    Examples
    --------
    >>> from luslines.images import Geometry
    >>> from luslines.gradientCheck import numerical_grad, relative_error
    >>> from luslines.radon import forward_radon
    >>> fine = Geometry.default(64, 64)
    >>> rows, cols = np.mgrid[:64, :64]
    >>> smooth = 0.2 + 0.6 * np.exp(-((rows - 30.)**2 + (cols - 36.)**2) / 120.)
    >>> loss, grad = ssim_loss_and_grad(forward_radon(Image(smooth), fine),
    ...                                 Image(smooth))
    >>> print(loss < 0.5)
    True

    The gradient agrees with central differences.

    >>> geo = Geometry.default(16, 16, angle_step=18.)
    >>> rows, cols = np.mgrid[:16, :16]
    >>> y = Image(0.2 + 0.6 * np.exp(-((rows - 7.)**2 + (cols - 9.)**2) / 20.))
    >>> z = forward_radon(y, geo)

    >>> def loss_of(values):
    ...     return ssim_loss_and_grad(Sinogram(geo, values), y)[0]
    >>> noisy = z.values + np.random.default_rng(1).normal(0, 0.5, geo.shape)
    >>> _, grad = ssim_loss_and_grad(Sinogram(geo, noisy), y)
    >>> cells = [(i, j) for i in range(0, 25, 3) for j in range(0, 10, 3)]
    >>> fd = numerical_grad(loss_of, noisy, indices=cells)
    >>> picked = tuple(np.array(cells).T)
    >>> print(relative_error(grad.values[picked], fd[picked]) <= 1e-3)
    True

    A perfect reconstruction costs nothing.

    >>> print(ssim_loss_and_grad(z, Image(_reconstruct(z.values, geo)))[0])
    0.0
    """
    geo = z_k.geometry
    observed = _pixels(y)
    geo.check_image(Image(observed))
    recon = _reconstruct(z_k.values, geo)
    similarity, dS_dI = _ssim_grad(recon, observed)
    if adjoint == "exact":
        dL_dz = _reconstruct_adjoint(-dS_dI, geo)
    elif adjoint == "surrogate":
        dL_dz = _project(-dS_dI, geo)
    else:
        raise ParameterError("adjoint must be 'exact' or 'surrogate', got {!r}"
                             .format(adjoint))
    return 1. - similarity, Sinogram(geo, dL_dz)


@dataclass(frozen=True, eq=False)
class SubsamplePair(object):
    """Two half-resolution sub-grids drawn from neighbouring cells.

    Parameters
    ----------
    g1, g2 : ndarray
        The sub-grids, each ``(n_r // 2, n_angles // 2)``.
    index1, index2 : ndarray
        Flat index into the source grid of the cell feeding each entry.
    """
    g1: np.ndarray = field(repr=False)
    g2: np.ndarray = field(repr=False)
    index1: np.ndarray = field(repr=False)
    index2: np.ndarray = field(repr=False)

    @property
    def shape(self):
        return self.g1.shape

    def first(self, grid):
        """Sub-grid of `grid` at the cells of `g1`."""
        return np.asarray(grid).ravel()[self.index1]

    def second(self, grid):
        """Sub-grid of `grid` at the cells of `g2`."""
        return np.asarray(grid).ravel()[self.index2]


def _grid(s):
    return s.values if isinstance(s, Sinogram) else np.asarray(s, dtype=float)


def neighbor_subsample(s, seed):
    """Split `s` into two sub-grids of adjacent cells.

    The grid is cut into disjoint 2 x 2 blocks (dropping an odd last row or
    column); in each block one of the 8 ordered pairs of horizontally or
    vertically adjacent cells is drawn uniformly, its first cell going to
    `g1` and its second to `g2`.

    Parameters
    ----------
    s : :class:`~luslines.images.Sinogram` or ndarray
    seed : int

    Returns
    -------
    :class:`SubsamplePair`

    Examples
    --------
    >>> pair = neighbor_subsample(np.full((7, 9), 0.25), seed=0)
    >>> print(pair.shape, np.all(pair.g1 == 0.25), np.all(pair.g2 == 0.25))
    (3, 4) True True

    Both cells of a pair come from the same block and are adjacent.

    >>> pair = neighbor_subsample(np.zeros((8, 10)), seed=5)
    >>> r1, c1 = np.divmod(pair.index1, 10)
    >>> r2, c2 = np.divmod(pair.index2, 10)
    >>> print(np.all(np.abs(r1 - r2) + np.abs(c1 - c2) == 1),
    ...       np.all((r1 // 2 == r2 // 2) & (c1 // 2 == c2 // 2)))
    True True

    Every ordered pair is equally likely.

    >>> counts = {}
    >>> for seed in range(10000):
    ...     pair = neighbor_subsample(np.zeros((2, 2)), seed)
    ...     key = (int(pair.index1[0, 0]), int(pair.index2[0, 0]))
    ...     counts[key] = counts.get(key, 0) + 1
    >>> print(len(counts), all(abs(n / 10000 - 1 / 8) <= 0.02
    ...                        for n in counts.values()))
    8 True
    >>> neighbor_subsample(np.zeros((1, 5)), seed=0)
    Traceback (most recent call last):
    ...
    luslines.errors.DimensionError: sub-sampling needs at least a 2x2 grid, got 1x5
    """
    values = _grid(s)
    n_r, n_w = values.shape
    if n_r < 2 or n_w < 2:
        raise DimensionError("sub-sampling needs at least a 2x2 grid, got "
                             "{}x{}".format(n_r, n_w))
    half_r, half_w = n_r // 2, n_w // 2
    rng = np.random.default_rng(seed)
    choice = rng.integers(0, len(_ADJACENT_PAIRS), size=(half_r, half_w))
    first = _ADJACENT_PAIRS[choice, 0]
    second = _ADJACENT_PAIRS[choice, 1]

    block_r = 2 * np.arange(half_r)[:, np.newaxis]
    block_c = 2 * np.arange(half_w)[np.newaxis, :]

    def flat(position):
        return (block_r + position // 2) * n_w + block_c + position % 2

    index1, index2 = flat(first), flat(second)
    flat_values = values.ravel()
    return SubsamplePair(g1=flat_values[index1], g2=flat_values[index2],
                         index1=index1, index2=index2)


def n2n_target(params, r, seed):
    """Regularization target: the split of the full-resolution output.

    Returns ``g1(f(r)) - g2(f(r))`` for the sub-sampling drawn with `seed`,
    where `f` is the unrolled network driven by its own input.
    """
    values = _grid(r)
    pair = neighbor_subsample(values, seed)
    full, _ = _unrolled_forward(values, values, params.W, params.mu,
                                params.gamma, params.k)
    return pair.first(full) - pair.second(full)


def n2n_loss_and_grads(params, r, alpha, seed, target=None):
    r"""Neighbor2Neighbor loss of the unrolled network and its gradients.

    With :math:`(g_1, g_2)` the sub-sampling of `r` drawn with `seed` and
    :math:`f` the network driven by its own input, whose weights are
    gathered at the cells of :math:`g_1`,

    .. math::

       L = \|f(g_1) - g_2\|^2
           + \alpha \|f(g_1) - g_2 - (g_1(f(r)) - g_2(f(r)))\|^2,

    where the last bracket is held constant.

    Parameters
    ----------
    params : :class:`~luslines.ducps.DucpsParams`
    r : :class:`~luslines.images.Sinogram` or ndarray
        Forward projection of a training image.
    alpha : float
        Weight of the regularizer, at least 0.
    seed : int
        Seed of the sub-sampling.
    target : ndarray, optional
        Precomputed :func:`n2n_target` (default computed here).

    Returns
    -------
    loss : float
    dW : ndarray
        Gradient scattered back to the full weight grid; cells outside
        `g1` get 0.
    dmu : float

    Examples
    --------
    A constant input makes both terms vanish up to the drift of the
    proximal map.

    >>> from luslines.ducps import DucpsParams
    >>> params = DucpsParams(W=np.full((8, 10), 1. - 1e-5), mu=1e-5,
    ...                      gamma=10.)
    >>> loss, dW, dmu = n2n_loss_and_grads(params, np.ones((8, 10)), 1., 0)
    >>> print(loss <= 1e-6)
    True

    With :math:`\alpha = 0` only the reconstruction term remains.

    >>> rng = np.random.default_rng(0)
    >>> r = rng.uniform(0.1, 1., (8, 10))
    >>> params = DucpsParams(W=rng.uniform(0.8, 1., (8, 10)), mu=0.2,
    ...                      gamma=0.5, k=3)
    >>> pair = neighbor_subsample(r, 7)
    >>> out, _ = _unrolled_forward(pair.g1, pair.g1, pair.first(params.W),
    ...                            0.2, 0.5, 3)
    >>> print(n2n_loss_and_grads(params, r, 0., 7)[0]
    ...       == np.sum((out - pair.g2)**2))
    True

    The gradients agree with central differences taken with the target
    held fixed.

    >>> from luslines.gradientCheck import numerical_grad, relative_error
    >>> target = n2n_target(params, r, 7)
    >>> loss, dW, dmu = n2n_loss_and_grads(params, r, 1., 7, target=target)
    >>> def loss_of(W, mu=0.2):
    ...     trial = DucpsParams(W=W, mu=mu, gamma=0.5, k=3)
    ...     return n2n_loss_and_grads(trial, r, 1., 7, target=target)[0]
    >>> fd_W = numerical_grad(loss_of, params.W)
    >>> fd_mu = (loss_of(params.W, 0.2 + 1e-6)
    ...          - loss_of(params.W, 0.2 - 1e-6)) / 2e-6
    >>> print(relative_error(dW, fd_W) <= 1e-3,
    ...       abs(dmu - fd_mu) <= 1e-3 * abs(fd_mu))
    True True
    """
    if not alpha >= 0:
        raise ParameterError("alpha must be >= 0, got {}".format(alpha))
    values = _grid(r)
    if values.shape != params.shape:
        raise DimensionError("input {} does not match parameters {}"
                             .format(values.shape, params.shape))
    pair = neighbor_subsample(values, seed)
    if target is None:
        target = n2n_target(params, values, seed)
    elif np.shape(target) != pair.shape:
        raise DimensionError("target {} does not match sub-grid {}"
                             .format(np.shape(target), pair.shape))

    W_sub = pair.first(params.W)
    out, trace = _unrolled_forward(pair.g1, pair.g1, W_sub, params.mu,
                                   params.gamma, params.k)
    gap = out - pair.g2
    residual = gap - target
    loss = np.sum(gap**2) + alpha * np.sum(residual**2)

    dL_dout = 2 * gap + 2 * alpha * residual
    dW_sub, dmu, _ = _unrolled_backward(trace, W_sub, params.mu,
                                        params.gamma, dL_dout)
    dW = np.zeros(params.shape)
    dW.ravel()[pair.index1.ravel()] = dW_sub.ravel()
    return float(loss), dW, dmu
