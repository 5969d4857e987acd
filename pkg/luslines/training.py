r"""Unsupervised training of the unrolled network.

Every epoch visits the training images in order, one image per step, and
updates the shared parameters :math:`(W, \mu)` of the network with either
loss of :mod:`luslines.losses`.  The learning rate is

.. math::

   \eta_e = \eta_0 \, f^{\lfloor e / n \rfloor}

for the zero-based epoch :math:`e`, with factor :math:`f` (default 0.5)
applied every :math:`n` epochs (default 5).  The epochs sharing a
learning rate form one stage of a
:class:`~luslines.checkpointStepper.CheckpointStepper`, and the epochs of
each stage are counted by a :class:`~luslines.fixedStepper.FixedStepper`.
"""

from __future__ import division
from __future__ import unicode_literals

import csv
import json
import logging
from dataclasses import asdict, dataclass, fields

import numpy as np

from luslines.cauchy import default_gamma
from luslines.checkpointStepper import CheckpointStepper
from luslines.ducps import _unrolled_forward, ducps_backward, ducps_init
from luslines.errors import (ConfigError, DimensionError, DivergenceError,
                             FormatError, ParameterError, StorageError)
from luslines.fixedStepper import FixedStepper
from luslines.images import Sinogram
from luslines.losses import n2n_loss_and_grads, ssim_loss_and_grad
from luslines.radon import _project

__docformat__ = 'restructuredtext'

__all__ = ["TrainConfig", "EpochRecord", "Adam", "GradientDescent",
           "learning_rate", "train", "save_history"]

_log = logging.getLogger(__name__)

_LOSSES = ("ssim", "n2n")
_OPTIMIZERS = ("adam", "sgd")


@dataclass(frozen=True)
class TrainConfig(object):
    """Settings of a training run.

    Parameters
    ----------
    epochs : int
        Number of passes over the dataset (default 20).
    lr0 : float
        Initial learning rate (default :math:`10^{-4}`).
    lr_halve_every : int
        Epochs between learning-rate reductions (default 5).
    lr_factor : float
        Learning-rate reduction factor (default 0.5).
    alpha : float
        Weight of the Neighbor2Neighbor regularizer (default 1).
    loss_kind : {"n2n", "ssim"}
        Training loss (default "n2n").
    optimizer : {"adam", "sgd"}
        Adaptive moment estimation or plain gradient descent (default
        "adam").
    seed : int
        Base seed of the neighbour sub-sampling; image `i` uses
        ``seed + i`` (default 0).
    gamma : float, optional
        Cauchy scale for every image (default a tenth of the peak of each
        image's forward projection).
    k : int
        Number of layers of a freshly initialized network (default 7).
    ssim_adjoint : {"exact", "surrogate"}
        Transpose used by the SSIM gradient (default "exact").

    Examples
    --------
    >>> TrainConfig(epochs=0)
    Traceback (most recent call last):
    ...
    luslines.errors.ConfigError: epochs: must be >= 1, got 0
    >>> TrainConfig.from_dict({"loss_kind": "l2"})
    Traceback (most recent call last):
    ...
    luslines.errors.ConfigError: loss_kind: must be one of ('ssim', 'n2n'), got 'l2'
    >>> cfg = TrainConfig.from_json('{"epochs": 3, "loss_kind": "ssim"}')
    >>> print(cfg.epochs, cfg.loss_kind, cfg.lr0)
    3 ssim 0.0001
    >>> TrainConfig.from_json(cfg.to_json()) == cfg
    True
    """
    epochs: int = 20
    lr0: float = 1e-4
    lr_halve_every: int = 5
    lr_factor: float = 0.5
    alpha: float = 1.
    loss_kind: str = "n2n"
    optimizer: str = "adam"
    seed: int = 0
    gamma: float = None
    k: int = 7
    ssim_adjoint: str = "exact"

    def __post_init__(self):
        if not self.epochs >= 1:
            raise ConfigError("epochs", "must be >= 1, got {}"
                              .format(self.epochs))
        if not self.lr0 > 0:
            raise ConfigError("lr0", "must be positive, got {}"
                              .format(self.lr0))
        if not self.lr_halve_every >= 1:
            raise ConfigError("lr_halve_every", "must be >= 1, got {}"
                              .format(self.lr_halve_every))
        if not 0 < self.lr_factor <= 1:
            raise ConfigError("lr_factor", "must lie in (0, 1], got {}"
                              .format(self.lr_factor))
        if not self.alpha >= 0:
            raise ConfigError("alpha", "must be >= 0, got {}"
                              .format(self.alpha))
        if self.loss_kind not in _LOSSES:
            raise ConfigError("loss_kind", "must be one of {}, got {!r}"
                              .format(_LOSSES, self.loss_kind))
        if self.optimizer not in _OPTIMIZERS:
            raise ConfigError("optimizer", "must be one of {}, got {!r}"
                              .format(_OPTIMIZERS, self.optimizer))
        if self.gamma is not None and not self.gamma > 0:
            raise ConfigError("gamma", "must be positive, got {}"
                              .format(self.gamma))
        if not self.k >= 1:
            raise ConfigError("k", "must be >= 1, got {}".format(self.k))
        if self.ssim_adjoint not in ("exact", "surrogate"):
            raise ConfigError("ssim_adjoint", "must be 'exact' or "
                              "'surrogate', got {!r}"
                              .format(self.ssim_adjoint))

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(key, "unknown training field")
        return cls(**data)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except ValueError as exc:
            raise FormatError("malformed training config ({})".format(exc))
        if not isinstance(data, dict):
            raise FormatError("training config must be a JSON object")
        return cls.from_dict(data)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


@dataclass(frozen=True)
class EpochRecord(object):
    """Mean loss over the images of one epoch (counted from 1)."""
    epoch: int
    mean_loss: float
    lr: float


def learning_rate(cfg, epoch):
    """Learning rate of the zero-based `epoch`.

    Examples
    --------
    >>> cfg = TrainConfig()
    >>> print([learning_rate(cfg, e) for e in (0, 4, 5, 12)])
    [0.0001, 0.0001, 5e-05, 2.5e-05]
    """
    return cfg.lr0 * cfg.lr_factor**(epoch // cfg.lr_halve_every)


class GradientDescent(object):
    r"""Plain gradient steps on `W` and on :math:`\log \mu`.

    Examples
    --------
    >>> from luslines.ducps import DucpsParams
    >>> params = DucpsParams(W=np.ones((2, 2)), mu=0.5, gamma=1.)
    >>> new = GradientDescent().step(params, np.ones((2, 2)), 0.4, 0.5)
    >>> print(new.W.tolist(), round(new.mu, 6))
    [[0.5, 0.5], [0.5, 0.5]] 0.452419
    """

    def step(self, params, dW, dmu, lr):
        grad = params.mu * dmu
        return params.updated(params.W - lr * dW,
                              params.mu * float(np.exp(-lr * grad)))


class Adam(object):
    r"""Gradient steps scaled by running moment estimates.

    Each of :math:`W` (elementwise) and :math:`\log \mu` keeps exponential
    averages of its gradient and squared gradient; the step is the
    bias-corrected first moment over the root of the bias-corrected second
    moment.  :math:`\mu` is multiplied by the exponential of minus its
    step.

    Parameters
    ----------
    beta1, beta2 : float
        Decay of the first and second moments (default 0.9 and 0.999).
    eps : float
        Added to the denominator (default :math:`10^{-8}`).

    Examples
    --------
    The first step moves every weight by the learning rate against the
    sign of its gradient, and multiplies the step size by
    :math:`e^{\pm\eta}`.

    >>> from luslines.ducps import DucpsParams
    >>> params = DucpsParams(W=np.ones((2, 2)), mu=0.5, gamma=1.)
    >>> adam = Adam()
    >>> new = adam.step(params, np.array([[1., -2.], [3., 0.]]), -4., 0.1)
    >>> print(np.round(new.W, 6).tolist(), round(new.mu, 6))
    [[0.9, 1.1], [0.9, 1.0]] 0.552585

    Weights are clamped to stay positive; the step needs no clamp.

    >>> new = Adam().step(params, np.ones((2, 2)), 4., 10.)
    >>> print(new.W.min(), 0 < new.mu < 1e-4)
    1e-08 True
    """

    def __init__(self, beta1=0.9, beta2=0.999, eps=1e-8):
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._moments = None

    def _direction(self, name, grad):
        m, v = self._moments[name]
        m = self.beta1 * m + (1 - self.beta1) * grad
        v = self.beta2 * v + (1 - self.beta2) * grad**2
        self._moments[name] = (m, v)
        m_hat = m / (1 - self.beta1**self.t)
        v_hat = v / (1 - self.beta2**self.t)
        return m_hat / (np.sqrt(v_hat) + self.eps)

    def step(self, params, dW, dmu, lr):
        if self._moments is None:
            self._moments = {"W": (np.zeros(params.shape),
                                   np.zeros(params.shape)),
                             "mu": (0., 0.)}
        self.t += 1
        W = params.W - lr * self._direction("W", np.asarray(dW))
        grad = params.mu * dmu
        mu = params.mu * float(np.exp(-lr * self._direction("mu", grad)))
        return params.updated(W, mu)


def _optimizer(cfg):
    return Adam() if cfg.optimizer == "adam" else GradientDescent()


def _ssim_step(params, y, r0, cfg):
    _, trace = _unrolled_forward(r0.values, r0.values, params.W, params.mu,
                                 params.gamma, params.k)
    loss, dL_dz = ssim_loss_and_grad(Sinogram(r0.geometry, trace.zs[-1]), y,
                                     adjoint=cfg.ssim_adjoint)
    dW, dmu = ducps_backward(trace, None, params, dL_dz_final=dL_dz)
    return loss, dW, dmu


def train(dataset, cfg, geo, params=None):
    """Fit the unrolled network to `dataset` without clean targets.

    Parameters
    ----------
    dataset : list of :class:`~luslines.images.Image`
        Training images on the geometry `geo`.
    cfg : :class:`TrainConfig`
    geo : :class:`~luslines.images.Geometry`
    params : :class:`~luslines.ducps.DucpsParams`, optional
        Starting parameters (default :func:`~luslines.ducps.ducps_init`).

    Returns
    -------
    params : :class:`~luslines.ducps.DucpsParams`
        Parameters after the last step; their `gamma` is the scale used
        at that step.
    history : list of :class:`EpochRecord`

    Raises
    ------
    ~luslines.errors.DivergenceError
        If a loss becomes non-finite; the message names the epoch and the
        step.

    Examples
    --------
    >>> from luslines.images import Geometry
    >>> from luslines.phantom import generate_phantom, random_specs
    >>> specs = random_specs(2, height=32, width=40, max_blines=1,
    ...                      separation=8, seed=4)
    >>> dataset = [generate_phantom(spec)[0] for spec in specs]
    >>> geo = Geometry.default(32, 40, angle_step=10.)
    >>> cfg = TrainConfig(epochs=4, lr0=1e-3, lr_halve_every=2)
    >>> params, history = train(dataset, cfg, geo)
    >>> print([record.lr for record in history])
    [0.001, 0.001, 0.0005, 0.0005]
    >>> print(history[-1].mean_loss < history[0].mean_loss)
    True
    >>> print(params.W.min() > 0, params.mu > 0)
    True True

    The step size moves by factors, so it trains without collapsing onto
    the positivity floor.

    >>> print(1e-6 < params.mu != 1e-5)
    True

    Runs are reproducible.

    >>> again, history2 = train(dataset, cfg, geo)
    >>> print(history2 == history, np.array_equal(again.W, params.W))
    True True

    The SSIM loss trains the same parameters.

    >>> ssim_cfg = TrainConfig(epochs=1, loss_kind="ssim")
    >>> params, history = train(dataset, ssim_cfg, geo)
    >>> print(len(history), 0 <= history[0].mean_loss <= 2)
    1 True
    """
    if len(dataset) == 0:
        raise ParameterError("cannot train on an empty dataset")
    prepared = []
    for y in dataset:
        geo.check_image(y)
        r0 = Sinogram(geo, _project(y.pixels, geo))
        gamma = cfg.gamma if cfg.gamma is not None else default_gamma(r0)
        prepared.append((y, r0, gamma))

    if params is None:
        params = ducps_init(geo, gamma=prepared[0][2], k=cfg.k)
    elif params.shape != geo.shape:
        raise DimensionError("parameters {} do not match geometry {}"
                             .format(params.shape, geo.shape))
    optimizer = _optimizer(cfg)

    _log.info("training: loss=%s, %d images, %d epochs, optimizer=%s",
              cfg.loss_kind, len(dataset), cfg.epochs, cfg.optimizer)

    history = []
    stops = list(range(cfg.lr_halve_every, cfg.epochs, cfg.lr_halve_every))
    stages = CheckpointStepper(start=0, stops=stops + [cfg.epochs],
                               stop=cfg.epochs, label="epoch")
    for stage in stages:
        lr = learning_rate(cfg, stage.begin)
        epochs = FixedStepper(start=stage.begin, stop=stage.end,
                              label="epoch")
        for epoch in epochs:
            losses = []
            for index, (y, r0, gamma) in enumerate(prepared):
                params = params.with_gamma(gamma)
                if cfg.loss_kind == "ssim":
                    loss, dW, dmu = _ssim_step(params, y, r0, cfg)
                else:
                    loss, dW, dmu = n2n_loss_and_grads(params, r0, cfg.alpha,
                                                       seed=cfg.seed + index)
                if not (np.isfinite(loss) and np.isfinite(dmu)
                        and np.all(np.isfinite(dW))):
                    raise DivergenceError("non-finite loss at epoch {} "
                                          "step {}".format(epoch.end,
                                                           index + 1))
                params = optimizer.step(params, dW, dmu, lr)
                losses.append(loss)
            mean_loss = float(np.mean(losses))
            epoch.succeeded(value=mean_loss)
            history.append(EpochRecord(epoch=epoch.end, mean_loss=mean_loss,
                                       lr=lr))
            _log.info("epoch %d: mean loss %.6g (lr %g)", epoch.end,
                      mean_loss, lr)
        stage.succeeded()

    return params, history


def save_history(history, path):
    """Write the loss history as CSV with columns epoch, mean_loss, lr."""
    try:
        with open(path, "w", newline="") as fobj:
            writer = csv.writer(fobj, lineterminator="\n")
            writer.writerow(["epoch", "mean_loss", "lr"])
            for record in history:
                writer.writerow([record.epoch, repr(record.mean_loss),
                                 repr(record.lr)])
    except OSError as exc:
        raise StorageError("{}: cannot write loss history ({})"
                           .format(path, exc))
