r"""Unrolled Cauchy proximal splitting network.

A fixed number :math:`k` of splitting iterations is unrolled into layers
that share a positive weight field :math:`W` (one weight per sinogram
cell) and a positive step :math:`\mu`,

.. math::

   z^l = W \odot x^l + \mu s, \qquad x^{l+1} = \operatorname{prox}(z^l),

where the drive :math:`s` is the forward projection of the observed image
and :math:`x^0` is the network input.  Gradients of a loss with respect to
:math:`W` and :math:`\mu` are propagated back through the layers by
:func:`ducps_backward`, using the implicit derivatives of the proximal root.

Examples
--------
With the initial parameters every layer is nearly the identity on positive
inputs.

>>> from luslines.images import Geometry
>>> geo = Geometry.default(16, 18)
>>> r0 = Sinogram(geo, np.random.default_rng(0).uniform(0.1, 1., geo.shape))
>>> params = ducps_init(geo, gamma=0.1 * r0.values.max())
>>> x, trace = ducps_forward(r0, r0, params)
>>> drift = np.linalg.norm(x.values - r0.values) / np.linalg.norm(r0.values)
>>> print(params.k, len(trace.xs), drift <= 1e-3)
7 7 True
"""

from __future__ import division
from __future__ import unicode_literals

from dataclasses import dataclass, field, replace

import numpy as np

from luslines.cauchy import cauchy_prox_grads, solve_prox_cubic
from luslines.errors import (DimensionError, FormatError, ParameterError,
                             StorageError, UnsupportedVersionError)
from luslines.fixedStepper import FixedStepper
from luslines.images import Sinogram

__docformat__ = 'restructuredtext'

__all__ = ["DucpsParams", "ForwardTrace", "ducps_init", "ducps_forward",
           "ducps_backward", "save_params", "load_params",
           "INIT_WEIGHT", "INIT_STEP", "DEFAULT_LAYERS"]

INIT_WEIGHT = 1. - 1e-5
INIT_STEP = 1e-5
DEFAULT_LAYERS = 7

_MAGIC = b"DUCP"
_VERSION = 1
_HEADER = np.dtype([("magic", "S4"),
                    ("version", "<u4"),
                    ("n_r", "<u4"),
                    ("n_angles", "<u4"),
                    ("k", "<u4"),
                    ("gamma", "<f8"),
                    ("mu", "<f8")])


@dataclass(frozen=True, eq=False)
class DucpsParams(object):
    """Parameters of the unrolled network.

    Parameters
    ----------
    W : ndarray
        Positive weight per sinogram cell.
    mu : float
        Positive step.
    gamma : float
        Positive Cauchy scale (fixed, not trained).
    k : int
        Number of layers (default 7).

    Examples
    --------
    >>> DucpsParams(W=np.array([[1., 0.]]), mu=1e-5, gamma=1.)
    Traceback (most recent call last):
    ...
    luslines.errors.ParameterError: W must be positive everywhere
    """
    W: np.ndarray = field(repr=False)
    mu: float
    gamma: float
    k: int = DEFAULT_LAYERS

    def __post_init__(self):
        W = np.array(self.W, dtype=float)
        W.setflags(write=False)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "k", int(self.k))
        if W.ndim != 2:
            raise DimensionError("W must be a 2-D grid, got shape {}"
                                 .format(W.shape))
        if not np.all(np.isfinite(W) & (W > 0)):
            raise ParameterError("W must be positive everywhere")
        if not (np.isfinite(self.mu) and self.mu > 0):
            raise ParameterError("mu must be positive, got {}"
                                 .format(self.mu))
        if not (np.isfinite(self.gamma) and self.gamma > 0):
            raise ParameterError("gamma must be positive, got {}"
                                 .format(self.gamma))
        if self.k < 1:
            raise ParameterError("k must be >= 1, got {}".format(self.k))

    @property
    def shape(self):
        return self.W.shape

    def with_gamma(self, gamma):
        return replace(self, gamma=gamma)

    def updated(self, W, mu, floor=1e-8):
        """Copy with new `W` and `mu`, both clamped to at least `floor`."""
        return replace(self, W=np.maximum(W, floor), mu=max(mu, floor))


@dataclass(frozen=True, eq=False)
class ForwardTrace(object):
    """Intermediate grids of one forward pass, kept for the backward pass.

    Parameters
    ----------
    xs : list of ndarray
        Input of every layer, :math:`x^0` to :math:`x^{k-1}`.
    zs : list of ndarray
        Pre-proximal grid of every layer, :math:`z^0` to :math:`z^{k-1}`.
    outputs : list of ndarray
        Output of every layer, :math:`x^1` to :math:`x^k`.
    drive : ndarray
        The drive term :math:`s`.
    """
    xs: list = field(repr=False)
    zs: list = field(repr=False)
    outputs: list = field(repr=False)
    drive: np.ndarray = field(repr=False)


def _grid(x):
    return x.values if isinstance(x, Sinogram) else np.asarray(x, dtype=float)


def _unrolled_forward(x0, drive, W, mu, gamma, k):
    xs, zs, outputs = [], [], []
    x = x0
    for layer in FixedStepper(start=0, stop=k, label="layer"):
        z = W * x + mu * drive
        new = solve_prox_cubic(z, gamma, mu)
        layer.succeeded(value=new)
        xs.append(x)
        zs.append(z)
        outputs.append(new)
        x = new
    return x, ForwardTrace(xs=xs, zs=zs, outputs=outputs, drive=drive)


def _unrolled_backward(trace, W, mu, gamma, dL_dx, dL_dz=None):
    """Gradients with respect to `W`, `mu` and the network input."""
    g_x = np.zeros_like(trace.drive) if dL_dx is None else dL_dx
    dW = np.zeros(np.broadcast(W, trace.drive).shape)
    dmu = 0.
    last = len(trace.zs) - 1
    for layer in range(last, -1, -1):
        z, x, u = trace.zs[layer], trace.xs[layer], trace.outputs[layer]
        du_dz, du_dmu = cauchy_prox_grads(z, u, gamma, mu, fallback=True)
        g_z = du_dz * g_x
        dmu += np.sum(du_dmu * g_x)
        if layer == last and dL_dz is not None:
            g_z = g_z + dL_dz
        dW += x * g_z
        dmu += np.sum(trace.drive * g_z)
        g_x = W * g_z
    return dW, float(dmu), g_x


def ducps_init(geo, gamma, k=DEFAULT_LAYERS):
    """Initial parameters: all weights 1 - 1e-5, step 1e-5.

    Examples
    --------
    >>> from luslines.images import Geometry
    >>> geo = Geometry.default(16, 16, angle_step=18.)
    >>> params = ducps_init(geo, gamma=0.5)
    >>> print(params.k, params.mu, np.all(params.W == 1 - 1e-5), params.shape)
    7 1e-05 True (25, 10)
    >>> print(np.array_equal(ducps_init(geo, 0.5).W, params.W))
    True
    """
    return DucpsParams(W=np.full(geo.shape, INIT_WEIGHT), mu=INIT_STEP,
                       gamma=gamma, k=k)


def ducps_forward(r0, drive, params):
    """Run the unrolled network on `r0` with drive term `drive`.

    Parameters
    ----------
    r0, drive : :class:`~luslines.images.Sinogram`
        Network input and drive, on the same geometry as `params`.
    params : :class:`DucpsParams`

    Returns
    -------
    x : :class:`~luslines.images.Sinogram`
        Output of the last layer.
    trace : :class:`ForwardTrace`

    Raises
    ------
    ~luslines.errors.DivergenceError
        If a layer output is non-finite; the message names the layer.

    Examples
    --------
    >>> from luslines.images import Geometry
    >>> geo = Geometry.default(16, 16, angle_step=18.)
    >>> zero = Sinogram(geo, np.zeros(geo.shape))
    >>> x, _ = ducps_forward(zero, zero, ducps_init(geo, gamma=1.))
    >>> print(np.all(x.values == 0))
    True

    A single layer is one gradient step followed by one proximal map.

    >>> rng = np.random.default_rng(1)
    >>> r0 = Sinogram(geo, rng.random(geo.shape))
    >>> s = Sinogram(geo, rng.random(geo.shape))
    >>> params = DucpsParams(W=rng.uniform(0.5, 1., geo.shape), mu=0.3,
    ...                      gamma=0.5, k=1)
    >>> x, _ = ducps_forward(r0, s, params)
    >>> manual = solve_prox_cubic(params.W * r0.values + 0.3 * s.values,
    ...                           0.5, 0.3)
    >>> print(np.array_equal(x.values, manual))
    True
    """
    x0, s = _grid(r0), _grid(drive)
    if x0.shape != params.shape or s.shape != params.shape:
        raise DimensionError("input {} and drive {} must match parameters {}"
                             .format(x0.shape, s.shape, params.shape))
    x, trace = _unrolled_forward(x0, s, params.W, params.mu, params.gamma,
                                 params.k)
    return Sinogram(r0.geometry, x), trace


def ducps_backward(trace, dL_dx_final, params, dL_dz_final=None):
    r"""Gradients of a loss with respect to `W` and `mu`.

    Parameters
    ----------
    trace : :class:`ForwardTrace`
        Produced by :func:`ducps_forward` with `params`.
    dL_dx_final : :class:`~luslines.images.Sinogram` or ndarray or None
        Gradient of the loss with respect to the network output.
    params : :class:`DucpsParams`
    dL_dz_final : :class:`~luslines.images.Sinogram` or ndarray, optional
        Gradient of the loss with respect to the pre-proximal grid of the
        last layer, for losses that read :math:`z^{k-1}` directly.

    Returns
    -------
    dW : ndarray
    dmu : float

    Examples
    --------
    >>> from luslines.gradientCheck import numerical_grad, relative_error
    >>> rng = np.random.default_rng(2)
    >>> x0 = rng.uniform(0.1, 1., (6, 5))
    >>> s = rng.uniform(0.1, 1., (6, 5))
    >>> weights = rng.uniform(0.1, 1., (6, 5))
    >>> W0 = rng.uniform(0.8, 1., (6, 5))
    >>> def loss(W, mu, k):
    ...     out, _ = _unrolled_forward(x0, s, W, mu, 0.5, k)
    ...     return np.sum(weights * out)
    >>> def check(k, shape=(6, 5)):
    ...     params = DucpsParams(W=W0, mu=0.3, gamma=0.5, k=k)
    ...     _, trace = _unrolled_forward(x0, s, W0, 0.3, 0.5, k)
    ...     dW, dmu = ducps_backward(trace, weights, params)
    ...     fd_W = numerical_grad(lambda W: loss(W, 0.3, k), W0)
    ...     fd_mu = (loss(W0, 0.3 + 1e-6, k)
    ...              - loss(W0, 0.3 - 1e-6, k)) / 2e-6
    ...     return relative_error(dW, fd_W), abs(dmu - fd_mu) / abs(fd_mu)
    >>> errors = check(k=1)
    >>> print(errors[0] <= 1e-4, errors[1] <= 1e-4)
    True True

    With no gradient arriving at the output, none leaves.

    >>> params = DucpsParams(W=W0, mu=0.3, gamma=0.5, k=3)
    >>> _, trace = _unrolled_forward(x0, s, W0, 0.3, 0.5, 3)
    >>> dW, dmu = ducps_backward(trace, np.zeros((6, 5)), params)
    >>> print(np.all(dW == 0), dmu == 0)
    True True

    Seven layers on a 16 x 18 grid.

    >>> x0 = rng.uniform(0.1, 1., (16, 18))
    >>> s = rng.uniform(0.1, 1., (16, 18))
    >>> weights = rng.uniform(0.1, 1., (16, 18))
    >>> W0 = rng.uniform(0.8, 1., (16, 18))
    >>> errors = check(k=7)
    >>> print(errors[0] <= 1e-3, errors[1] <= 1e-3)
    True True
    """
    g_x = None if dL_dx_final is None else _grid(dL_dx_final)
    g_z = None if dL_dz_final is None else _grid(dL_dz_final)
    for grad in (g_x, g_z):
        if grad is not None and grad.shape != trace.drive.shape:
            raise DimensionError("gradient shape {} does not match {}"
                                 .format(grad.shape, trace.drive.shape))
    dW, dmu, _ = _unrolled_backward(trace, params.W, params.mu,
                                    params.gamma, g_x, g_z)
    return dW, dmu


def save_params(params, path):
    """Write `params` in the binary model format.

    Examples
    --------
    >>> import os, tempfile
    >>> tmp = tempfile.mkdtemp()
    >>> rng = np.random.default_rng(3)
    >>> params = DucpsParams(W=rng.uniform(0.5, 1.5, (25, 10)), mu=0.01,
    ...                      gamma=2.5, k=7)
    >>> path = os.path.join(tmp, "model.ducp")
    >>> save_params(params, path)
    >>> back = load_params(path)
    >>> print(np.array_equal(back.W, params.W.astype(np.float32)),
    ...       back.mu, back.gamma, back.k)
    True 0.01 2.5 7

    Truncated files and newer versions are refused.

    >>> data = open(path, "rb").read()
    >>> _ = open(path, "wb").write(data[:-3])
    >>> load_params(path)  # doctest: +ELLIPSIS
    Traceback (most recent call last):
    ...
    luslines.errors.FormatError: ...: payload holds 997 bytes, expected 1000
    >>> newer = bytearray(data)
    >>> newer[4:8] = np.array([2], dtype="<u4").tobytes()
    >>> _ = open(path, "wb").write(bytes(newer))
    >>> load_params(path)  # doctest: +ELLIPSIS
    Traceback (most recent call last):
    ...
    luslines.errors.UnsupportedVersionError: ...: model format version 2 is not supported (expected 1)
    """
    header = np.zeros(1, dtype=_HEADER)
    header["magic"] = _MAGIC
    header["version"] = _VERSION
    header["n_r"], header["n_angles"] = params.shape
    header["k"] = params.k
    header["gamma"] = params.gamma
    header["mu"] = params.mu
    try:
        with open(path, "wb") as fobj:
            fobj.write(header.tobytes())
            fobj.write(params.W.astype("<f4").tobytes())
    except OSError as exc:
        raise StorageError("{}: cannot write model ({})".format(path, exc))


def load_params(path):
    """Read parameters written by :func:`save_params`.

    Raises
    ------
    ~luslines.errors.FormatError
        If the file is truncated or has the wrong magic.
    ~luslines.errors.UnsupportedVersionError
        If the file has a format version other than 1.
    """
    try:
        with open(path, "rb") as fobj:
            data = fobj.read()
    except OSError as exc:
        raise FormatError("{}: unreadable model ({})".format(path, exc))

    if len(data) < _HEADER.itemsize:
        raise FormatError("{}: truncated header ({} of {} bytes)"
                          .format(path, len(data), _HEADER.itemsize))
    header = np.frombuffer(data[:_HEADER.itemsize], dtype=_HEADER)[0]
    if header["magic"] != _MAGIC:
        raise FormatError("{}: bad magic {!r}, expected {!r}"
                          .format(path, bytes(header["magic"]), _MAGIC))
    if header["version"] != _VERSION:
        raise UnsupportedVersionError("{}: model format version {} is not "
                                      "supported (expected {})"
                                      .format(path, int(header["version"]),
                                              _VERSION))
    n_r, n_angles = int(header["n_r"]), int(header["n_angles"])
    payload = data[_HEADER.itemsize:]
    if len(payload) != 4 * n_r * n_angles:
        raise FormatError("{}: payload holds {} bytes, expected {}"
                          .format(path, len(payload), 4 * n_r * n_angles))
    W = np.frombuffer(payload, dtype="<f4").reshape(n_r, n_angles)
    try:
        return DucpsParams(W=W.astype(float), mu=float(header["mu"]),
                           gamma=float(header["gamma"]), k=int(header["k"]))
    except ParameterError as exc:
        raise FormatError("{}: invalid parameters ({})".format(path, exc))
