r"""Cauchy proximal splitting in the Radon domain.

Restores the set of lines :math:`x` of an image :math:`y` by
forward-backward splitting of

.. math::

   \frac{1}{2}\|y - \mathcal{R}^{-1} x\|^2 + \phi_\gamma(x),

alternating a gradient step on the data term,

.. math::

   z^k = x^k - \mu \mathcal{R}\left(\mathcal{R}^{-1} x^k - y\right),

with the Cauchy proximal map :math:`x^{k+1} = \operatorname{prox}(z^k)`.
"""

from __future__ import division
from __future__ import unicode_literals

import logging
from functools import lru_cache

import numpy as np

from luslines.cauchy import cauchy_penalty, default_gamma, solve_prox_cubic
from luslines.errors import ParameterError
from luslines.images import Sinogram
from luslines.radon import _pixels, _project, _reconstruct
from luslines.toleranceStepper import ToleranceStepper

__docformat__ = 'restructuredtext'

__all__ = ["cps_solve", "estimate_lipschitz", "default_step"]

_log = logging.getLogger(__name__)


@lru_cache(maxsize=16)
def estimate_lipschitz(geo, n_iter=20, seed=0):
    r"""Largest eigenvalue of :math:`\mathcal{R} \mathcal{R}^{-1}` on `geo`.

    Estimated by `n_iter` power iterations from a seeded random start;
    results are cached per geometry.

    Examples
    --------
    >>> from luslines.images import Geometry
    >>> geo = Geometry.default(32, 32, angle_step=6.)
    >>> L = estimate_lipschitz(geo)
    >>> print(L > 0, estimate_lipschitz(geo) == L)
    True True
    """
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(geo.shape)
    v /= np.linalg.norm(v)
    estimate = 0.
    for _ in range(n_iter):
        w = _project(_reconstruct(v, geo), geo)
        estimate = np.linalg.norm(w)
        if estimate == 0:
            break
        v = w / estimate
    return float(estimate)


def default_step(geo):
    """Step size half the inverse of :func:`estimate_lipschitz`."""
    return 0.5 / estimate_lipschitz(geo)


def cps_solve(y, geo, gamma=None, mu=None, max_iter=500, tol=1e-3,
              record=False):
    r"""Restore the Radon-domain lines of `y` by Cauchy proximal splitting.

    Starting from :math:`x^0 = \mathcal{R} y`, iterates until the relative
    change :math:`\|x^{k} - x^{k-1}\| / \|x^{k-1}\|` drops below `tol` or
    `max_iter` iterations have run.

    Parameters
    ----------
    y : :class:`~luslines.images.Image`
        Observed image.
    geo : :class:`~luslines.images.Geometry`
    gamma : float, optional
        Cauchy scale (default a tenth of the largest magnitude of
        :math:`x^0`).
    mu : float, optional
        Step size (default :func:`default_step`).
    max_iter : int
        Largest number of iterations (default 500).
    tol : float
        Relative-change tolerance (default :math:`10^{-3}`).
    record : bool
        Whether to return the stepper, whose history holds the objective
        and scaled change of every iteration (default False).

    Returns
    -------
    x : :class:`~luslines.images.Sinogram`
        Last iterate.
    iterations : int
        Number of iterations performed.
    stepper : :class:`~luslines.toleranceStepper.ToleranceStepper`
        Only when `record` is True.

    Raises
    ------
    ~luslines.errors.DivergenceError
        If an iterate becomes non-finite.

    Examples
    --------
    A blank image is a fixed point.

    >>> from luslines.images import Geometry, Image
    >>> geo = Geometry.default(32, 32, angle_step=6.)
    >>> x, n = cps_solve(Image(np.zeros((32, 32))), geo)
    >>> print(n, np.all(x.values == 0))
    1 True

    An infinite tolerance stops after one iteration.

    >>> rng = np.random.default_rng(0)
    >>> y = Image(rng.random((32, 32)))
    >>> print(cps_solve(y, geo, tol=np.inf)[1])
    1

    The restored sinogram of a B-line phantom keeps the peak of the
    observed one.

    >>> from luslines.phantom import PhantomSpec, generate_phantom
    >>> from luslines.radon import forward_radon
    >>> spec = PhantomSpec(height=64, width=80, pleural_depth=20,
    ...                    bline_columns=[50], n_alines=1)
    >>> img, _ = generate_phantom(spec)
    >>> geo = Geometry.default(64, 80, angle_step=2.)
    >>> x, n, stepper = cps_solve(img, geo, record=True)
    >>> r0, w0 = forward_radon(img, geo).peak()
    >>> r1, w1 = x.peak()
    >>> print(abs(r1 - r0) <= geo.r_step, abs(w1 - w0) <= geo.angle_step)
    True True
    >>> print(stepper.converged, 1 < n <= 500)
    True True

    The history holds one objective and one scaled change per iteration;
    only the last change is below the tolerance.

    >>> print(len(stepper.values) == len(stepper.errors) == n)
    True
    >>> print(stepper.errors[-1] < 1, np.all(stepper.errors[:-1] >= 1))
    True True
    >>> print(np.all(np.isfinite(stepper.values)))
    True
    """
    if max_iter < 1:
        raise ParameterError("max_iter must be >= 1, got {}".format(max_iter))
    if not tol > 0:
        raise ParameterError("tol must be positive, got {}".format(tol))
    observed = _pixels(y, geo)
    x = _project(observed, geo)
    if gamma is None:
        gamma = default_gamma(x)
    if mu is None:
        mu = default_step(geo)
    if not (gamma > 0 and mu > 0):
        raise ParameterError("gamma and mu must be positive, got {} and {}"
                             .format(gamma, mu))

    stepper = ToleranceStepper(start=0, stop=max_iter, record=record)
    for step in stepper:
        residual = _reconstruct(x, geo) - observed
        objective = 0.5 * np.sum(residual**2) + cauchy_penalty(x, gamma)
        z = x - mu * _project(residual, geo)
        new = solve_prox_cubic(z, gamma, mu)

        change = np.linalg.norm(new - x)
        size = np.linalg.norm(x)
        relative = change / size if size > 0 else change
        with np.errstate(invalid='ignore'):
            error = relative / tol
        step.succeeded(value=objective, error=error)
        x = new

    _log.debug("cps_solve: %d iterations (converged=%s, gamma=%g, mu=%g)",
               stepper.iterations, stepper.converged, gamma, mu)

    result = Sinogram(geo, x)
    if record:
        return result, stepper.iterations, stepper
    return result, stepper.iterations
