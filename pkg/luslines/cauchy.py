r"""Cauchy penalty and its proximal operator.

The Cauchy prior with scale :math:`\gamma` has the negative log-density

.. math::

   \phi_\gamma(x) = -\sum_{i,j} \log\frac{\gamma}{\gamma^2 + x_{i,j}^2},

and its proximal operator with step :math:`\mu`,

.. math::

   \operatorname{prox}(z) = \arg\min_u \frac{(z - u)^2}{2\mu}
                            - \log\frac{\gamma}{\gamma^2 + u^2},

is a real root of the cubic

.. math::

   u^3 - z u^2 + (\gamma^2 + 2\mu) u - z \gamma^2 = 0.

The roots are found with Cardano's formula, using the trigonometric form
when the cubic has three real roots, polished by a few safeguarded Newton
steps, and the root with the smallest objective is kept (ties go to the
root of smallest magnitude).

Examples
--------
The proximal map shrinks towards zero, keeps the sign of its argument and
is odd.

>>> rng = np.random.default_rng(0)
>>> z = rng.uniform(-5, 5, 10000)
>>> gamma = rng.uniform(0.05, 2, 10000)
>>> mu = rng.uniform(1e-4, 4, 10000)
>>> u = solve_prox_cubic(z, gamma, mu)
>>> ratio = u / z
>>> print(np.all((ratio > 0) & (ratio <= 1)))
True
>>> print(np.array_equal(solve_prox_cubic(-z, gamma, mu), -u))
True

It is the global minimizer.  A coarse grid over :math:`[-|z|, |z|]` finds
the best basin, and grids a thousand times finer around the coarse best
point and around the returned root settle which of the two is lower, to a
resolution finer than a million-point grid.

>>> def objective(v, z, gamma, mu):
...     return (z - v)**2 / (2 * mu) + np.log(gamma**2 + v**2) - np.log(gamma)
>>> def grid_minimizer(z, gamma, mu, u):
...     coarse = np.linspace(-abs(z), abs(z), 10001)
...     start = coarse[np.argmin(objective(coarse, z, gamma, mu))]
...     best = []
...     for center in (start, u):
...         fine = center + np.linspace(-1e-3, 1e-3, 2001)
...         values = objective(fine, z, gamma, mu)
...         best.append((values.min(), fine[np.argmin(values)]))
...     return min(best)[1]
>>> misplaced = [i for i in range(10000)
...              if abs(grid_minimizer(z[i], gamma[i], mu[i], u[i])
...                     - u[i]) > 1e-5]
>>> print(misplaced)
[]

When the cubic has three real roots, the one returned has the smallest
objective among them.

>>> z3, gamma3, mu3 = 3., 0.1, 0.5
>>> roots = np.roots([1., -z3, gamma3**2 + 2 * mu3, -z3 * gamma3**2])
>>> roots = np.real(roots[np.abs(np.imag(roots)) < 1e-12])
>>> print(len(roots))
3
>>> chosen = solve_prox_cubic(z3, gamma3, mu3)
>>> print(np.isclose(chosen, roots[np.argmin(objective(roots, z3, gamma3,
...                                                   mu3))]))
True
"""

from __future__ import division
from __future__ import unicode_literals

from dataclasses import dataclass

import numpy as np

from luslines.errors import DegenerateRootError, ParameterError
from luslines.images import Sinogram

__docformat__ = 'restructuredtext'

__all__ = ["ProxParams", "cauchy_penalty", "solve_prox_cubic",
           "cauchy_prox", "cauchy_prox_grads", "default_gamma"]

_DEGENERATE = 1e-12
_NEWTON_STEPS = 3


@dataclass(frozen=True)
class ProxParams(object):
    """Scale `gamma` and step `mu` of the Cauchy proximal operator.

    Examples
    --------
    >>> ProxParams(gamma=0., mu=1.)
    Traceback (most recent call last):
    ...
    luslines.errors.ParameterError: gamma must be positive, got 0.0
    """
    gamma: float
    mu: float

    def __post_init__(self):
        for name in ("gamma", "mu"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ParameterError("{} must be positive, got {!r}"
                                     .format(name, float(value)))


def _values(x):
    return x.values if isinstance(x, Sinogram) else np.asarray(x, dtype=float)


def cauchy_penalty(x, gamma):
    """Negative log-density of the Cauchy prior summed over `x`.

    Parameters
    ----------
    x : :class:`~luslines.images.Sinogram` or array_like
    gamma : float
        Positive scale.

    Examples
    --------
    >>> print(cauchy_penalty(np.zeros(10), 1.))
    0.0
    >>> print(round(cauchy_penalty([1.], 1.), 4))
    0.6931
    >>> x = np.random.default_rng(1).standard_normal((6, 7))
    >>> naive = -sum(np.log(0.3 / (0.09 + v**2)) for v in x.ravel())
    >>> print(abs(cauchy_penalty(x, 0.3) - naive) <= 1e-10)
    True
    >>> cauchy_penalty(x, -1.)
    Traceback (most recent call last):
    ...
    luslines.errors.ParameterError: gamma must be positive, got -1.0
    """
    if not gamma > 0:
        raise ParameterError("gamma must be positive, got {!r}"
                             .format(float(gamma)))
    values = _values(x)
    return float(np.sum(np.log(gamma**2 + values**2) - np.log(gamma)))


def _objective(u, z, gamma, mu):
    return (z - u)**2 / (2 * mu) + np.log(gamma**2 + u**2) - np.log(gamma)


def _cubic(u, z, gamma2, b):
    return ((u - z) * u + b) * u - z * gamma2


def _cubic_slope(u, z, b):
    return (3 * u - 2 * z) * u + b


def _candidate_roots(z, gamma, mu):
    """Three root estimates per cell (repeated when only one is real)."""
    gamma2 = gamma**2
    b = gamma2 + 2 * mu
    shift = z / 3.

    # depressed cubic t^3 + p t + q = 0 with u = t + z/3
    p = b - z**2 / 3.
    q = -2. * z**3 / 27. + z * b / 3. - z * gamma2
    disc = (q / 2.)**2 + (p / 3.)**3

    one = disc >= 0
    root_disc = np.sqrt(np.where(one, disc, 0.))
    single = np.cbrt(-q / 2. + root_disc) + np.cbrt(-q / 2. - root_disc)

    safe_p = np.where(one, -1., p)
    radius = 2. * np.sqrt(-safe_p / 3.)
    cosine = np.clip(3. * q / (2. * safe_p) * np.sqrt(-3. / safe_p), -1., 1.)
    phase = np.arccos(cosine) / 3.
    candidates = []
    for k in range(3):
        triple = radius * np.cos(phase - 2. * np.pi * k / 3.)
        candidates.append(np.where(one, single, triple) + shift)

    lo = np.minimum(0., z)
    hi = np.maximum(0., z)
    polished = []
    for u in candidates:
        for _ in range(_NEWTON_STEPS):
            f = _cubic(u, z, gamma2, b)
            slope = _cubic_slope(u, z, b)
            with np.errstate(divide='ignore', invalid='ignore'):
                trial = np.where(slope != 0, u - f / slope, u)
            better = (np.isfinite(trial)
                      & (np.abs(_cubic(trial, z, gamma2, b)) <= np.abs(f)))
            u = np.where(better, trial, u)
        polished.append(np.clip(u, lo, hi))
    return np.stack(polished)


def solve_prox_cubic(z, gamma, mu):
    """Cauchy proximal map of `z`, elementwise.

    Parameters
    ----------
    z : float or array_like
        Points to map.
    gamma, mu : float or array_like
        Positive scale and step, broadcast against `z`.

    Returns
    -------
    float or ndarray
        The real root of the proximal cubic minimizing the proximal
        objective; a float when all arguments are scalars.

    Examples
    --------
    >>> print(solve_prox_cubic(0., 0.7, 2.))
    0.0
    >>> print(abs(solve_prox_cubic(1., 1., 1e-12) - 1.) <= 1e-6)
    True
    >>> grid = np.linspace(-2., 2., 1000001)
    >>> objective = (2. - grid)**2 / 2. - np.log(0.5 / (0.25 + grid**2))
    >>> print(abs(solve_prox_cubic(2., 0.5, 1.) - grid[np.argmin(objective)])
    ...       <= 1e-5)
    True
    """
    scalar = all(np.ndim(a) == 0 for a in (z, gamma, mu))
    z, gamma, mu = np.broadcast_arrays(np.asarray(z, dtype=float),
                                       np.asarray(gamma, dtype=float),
                                       np.asarray(mu, dtype=float))
    # the map is odd, so solve for |z| and restore the sign
    magnitude = np.abs(z)
    candidates = _candidate_roots(magnitude, gamma, mu)
    scores = _objective(candidates, magnitude, gamma, mu)
    tied = scores <= scores.min(axis=0)
    pick = np.argmin(np.where(tied, candidates, np.inf), axis=0)
    u = np.sign(z) * np.take_along_axis(candidates, pick[np.newaxis],
                                        axis=0)[0]
    if scalar:
        return float(u)
    return u


def cauchy_prox(z, params):
    """Cauchy proximal map applied to every cell of a sinogram.

    Parameters
    ----------
    z : :class:`~luslines.images.Sinogram`
    params : :class:`ProxParams`

    Returns
    -------
    :class:`~luslines.images.Sinogram`

    Examples
    --------
    >>> from luslines.images import Geometry
    >>> geo = Geometry.default(16, 16, angle_step=18.)
    >>> params = ProxParams(gamma=0.4, mu=0.3)
    >>> print(np.all(cauchy_prox(Sinogram(geo, np.zeros(geo.shape)),
    ...                          params).values == 0))
    True
    >>> rng = np.random.default_rng(3)
    >>> z = Sinogram(geo, rng.uniform(-3, 3, geo.shape))
    >>> u = cauchy_prox(z, params).values
    >>> scalar = [[solve_prox_cubic(z.values[i, j], 0.4, 0.3)
    ...            for j in range(geo.n_angles)] for i in range(geo.n_r)]
    >>> print(np.allclose(u, scalar, rtol=0., atol=1e-12))
    True

    The map is monotone.

    >>> bigger = Sinogram(geo, z.values + rng.uniform(0, 1, geo.shape))
    >>> print(np.all(cauchy_prox(bigger, params).values >= u))
    True
    """
    return Sinogram(z.geometry,
                    solve_prox_cubic(z.values, params.gamma, params.mu))


def cauchy_prox_grads(z, u, gamma, mu, fallback=False):
    r"""Derivatives of the proximal root with respect to `z` and `mu`.

    Differentiating the cubic implicitly gives

    .. math::

       \frac{\partial u}{\partial z} = \frac{u^2 + \gamma^2}{D},
       \qquad
       \frac{\partial u}{\partial \mu} = \frac{-2 u}{D},
       \qquad
       D = 3 u^2 - 2 z u + \gamma^2 + 2 \mu.

    Parameters
    ----------
    z, u : float or array_like
        Arguments and their proximal roots.
    gamma, mu : float
        Scale and step.
    fallback : bool
        Whether cells with :math:`|D| < 10^{-12}` get one-sided finite
        differences (step :math:`10^{-6} \max(1, |z|)`) instead of raising
        (default False).

    Returns
    -------
    du_dz, du_dmu : float or ndarray

    Raises
    ------
    ~luslines.errors.DegenerateRootError
        If some :math:`|D| < 10^{-12}` and `fallback` is False.

    Examples
    --------
    >>> du_dz, du_dmu = cauchy_prox_grads(1., 1., 1., 1e-12)
    >>> print(round(du_dz, 9), cauchy_prox_grads(0., 0., 0.5, 0.2)[1] == 0)
    1.0 True

    The derivatives agree with central differences.

    >>> from luslines.gradientCheck import relative_error
    >>> rng = np.random.default_rng(4)
    >>> z = rng.uniform(-5, 5, 10000)
    >>> gamma = rng.uniform(0.05, 2, 10000)
    >>> mu = rng.uniform(1e-4, 4, 10000)
    >>> u = solve_prox_cubic(z, gamma, mu)
    >>> D = 3 * u**2 - 2 * z * u + gamma**2 + 2 * mu
    >>> du_dz, du_dmu = cauchy_prox_grads(z, u, gamma, mu)
    >>> h = 1e-5
    >>> fd_z = (solve_prox_cubic(z + h, gamma, mu)
    ...         - solve_prox_cubic(z - h, gamma, mu)) / (2 * h)
    >>> fd_mu = (solve_prox_cubic(z, gamma, mu + h)
    ...          - solve_prox_cubic(z, gamma, mu - h)) / (2 * h)
    >>> kept = np.abs(D) >= 1e-6
    >>> print(relative_error(du_dz[kept], fd_z[kept]) <= 1e-4,
    ...       relative_error(du_dmu[kept], fd_mu[kept]) <= 1e-4)
    True True

    A vanishing denominator is reported.

    >>> cauchy_prox_grads(1., 1., 1., -1.)
    Traceback (most recent call last):
    ...
    luslines.errors.DegenerateRootError: implicit derivative undefined at 1 cell(s)
    """
    scalar = all(np.ndim(a) == 0 for a in (z, u, gamma, mu))
    z, u, gamma, mu = np.broadcast_arrays(*(np.asarray(a, dtype=float)
                                            for a in (z, u, gamma, mu)))
    denominator = (3 * u - 2 * z) * u + gamma**2 + 2 * mu
    degenerate = np.abs(denominator) < _DEGENERATE
    if np.any(degenerate) and not fallback:
        raise DegenerateRootError("implicit derivative undefined at {} cell(s)"
                                  .format(int(degenerate.sum())))

    safe = np.where(degenerate, 1., denominator)
    du_dz = (u**2 + gamma**2) / safe
    du_dmu = -2. * u / safe

    if np.any(degenerate):
        zd, gd, md, ud = (a[degenerate] for a in (z, gamma, mu, u))
        step_z = 1e-6 * np.maximum(1., np.abs(zd))
        step_mu = 1e-6 * np.maximum(1., md)
        du_dz = np.array(du_dz)
        du_dmu = np.array(du_dmu)
        du_dz[degenerate] = (solve_prox_cubic(zd + step_z, gd, md)
                             - ud) / step_z
        du_dmu[degenerate] = (solve_prox_cubic(zd, gd, md + step_mu)
                              - ud) / step_mu

    if scalar:
        return float(du_dz), float(du_dmu)
    return du_dz, du_dmu


def default_gamma(r0):
    """Scale used when none is configured: a tenth of the largest magnitude.

    Examples
    --------
    >>> print(default_gamma(np.array([[0., -30.], [12., 4.]])))
    3.0
    >>> print(default_gamma(np.zeros((3, 3))))
    1.0
    """
    peak = float(np.max(np.abs(_values(r0))))
    if peak > 0:
        return peak / 10.
    return 1.
