"""Run configuration shared by the command-line tools.

A configuration is a JSON object whose keys are the fields of
:class:`RunConfig`; the nested objects ``"detection"`` and ``"train"`` hold
the fields of :class:`~luslines.lineIdentification.DetectionKnobs` and
:class:`~luslines.training.TrainConfig`.  Missing keys take their
defaults and unknown keys are rejected.

Examples
--------
>>> cfg = RunConfig.from_dict({"angle_step": 2., "detection": {"lam": 0.5},
...                            "train": {"epochs": 3}})
>>> print(cfg.angle_step, cfg.knobs().lam, cfg.train.epochs, cfg.solver)
2.0 0.5 3 cps
>>> RunConfig.from_dict({"detection": {"nms": 2}})
Traceback (most recent call last):
...
luslines.errors.ConfigError: detection.nms: unknown detection field
>>> RunConfig.from_json(cfg.to_json()) == cfg
True
"""

from __future__ import division
from __future__ import unicode_literals

import json
import os
from dataclasses import asdict, dataclass, field, fields

from luslines.errors import ConfigError, FormatError, MissingFileError
from luslines.images import Geometry
from luslines.lineIdentification import DetectionKnobs
from luslines.training import TrainConfig

__docformat__ = 'restructuredtext'

__all__ = ["RunConfig", "load_config", "thread_count"]

_SOLVERS = ("cps", "ducps", "radon")
_NESTED = {"detection": DetectionKnobs, "train": TrainConfig}


@dataclass(frozen=True)
class RunConfig(object):
    """Settings of the command-line tools.

    Parameters
    ----------
    angle_step, r_step : float
        Radon sampling (default 1 degree and 1 pixel).
    pad_height, pad_width : int, optional
        Frames are padded to this size before processing (default none).
    gamma : float, optional
        Cauchy scale (default a tenth of the peak of each frame's forward
        projection).
    solver : {"cps", "ducps", "radon"}
        Restoration before line identification (default "cps").
    model : str, optional
        Parameter file of the unrolled network, needed by "ducps".
    max_iter : int
        Iteration cap of proximal splitting (default 500).
    tol : float
        Relative-change tolerance of proximal splitting (default 1e-3).
    threshold : float
        Score above which a matched detection counts (default 0.5).
    overlay_png : bool
        Whether to write colour overlays next to the gray ones (default
        False).
    seed : int
        Seed of the generated phantoms (default 0).
    detection : :class:`~luslines.lineIdentification.DetectionKnobs`
    train : :class:`~luslines.training.TrainConfig`
    """
    angle_step: float = 1.
    r_step: float = 1.
    pad_height: int = None
    pad_width: int = None
    gamma: float = None
    solver: str = "cps"
    model: str = None
    max_iter: int = 500
    tol: float = 1e-3
    threshold: float = 0.5
    overlay_png: bool = False
    seed: int = 0
    detection: DetectionKnobs = field(default_factory=DetectionKnobs)
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        if not self.angle_step > 0:
            raise ConfigError("angle_step", "must be positive")
        if not self.r_step > 0:
            raise ConfigError("r_step", "must be positive")
        if (self.pad_height is None) != (self.pad_width is None):
            raise ConfigError("pad_height", "pad_height and pad_width go "
                              "together")
        if self.gamma is not None and not self.gamma > 0:
            raise ConfigError("gamma", "must be positive, got {}"
                              .format(self.gamma))
        if self.solver not in _SOLVERS:
            raise ConfigError("solver", "must be one of {}, got {!r}"
                              .format(_SOLVERS, self.solver))
        if self.solver == "ducps" and self.model is None:
            raise ConfigError("model", "solver 'ducps' needs a model file")
        if not self.max_iter >= 1:
            raise ConfigError("max_iter", "must be >= 1")
        if not self.tol > 0:
            raise ConfigError("tol", "must be positive")
        if not 0 <= self.threshold < 1:
            raise ConfigError("threshold", "must lie in [0, 1)")

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        values = {}
        for key, value in data.items():
            if key not in known:
                raise ConfigError(key, "unknown run field")
            if key in _NESTED:
                if not isinstance(value, dict):
                    raise ConfigError(key, "must be an object")
                try:
                    value = _NESTED[key].from_dict(value)
                except ConfigError as exc:
                    raise ConfigError("{}.{}".format(key, exc.field),
                                      exc.message) from None
            values[key] = value
        return cls(**values)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except ValueError as exc:
            raise FormatError("malformed configuration ({})".format(exc))
        if not isinstance(data, dict):
            raise FormatError("configuration must be a JSON object")
        return cls.from_dict(data)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    def knobs(self):
        return self.detection

    def solver_args(self):
        """Keyword arguments of :func:`~luslines.lineIdentification.restore`
        besides the frame, the geometry and the parameters."""
        return {"solver": self.solver, "gamma": self.gamma,
                "max_iter": self.max_iter, "tol": self.tol}

    def geometry_for(self, img):
        """Radon grid of frames shaped like `img`.

        Examples
        --------
        >>> from luslines.images import Image
        >>> import numpy as np
        >>> RunConfig(angle_step=2.).geometry_for(Image(np.zeros((64, 80)))).shape
        (105, 90)
        """
        return Geometry.for_image(img, angle_step=self.angle_step,
                                  r_step=self.r_step)

    def model_path(self):
        """Path of the model file, which must exist."""
        if self.model is None:
            raise ConfigError("model", "no model file configured")
        if not os.path.isfile(self.model):
            raise MissingFileError("model file {} not found"
                                   .format(self.model))
        return self.model

    def overridden(self, **overrides):
        """Copy with the non-None `overrides` applied, nested keys written
        as ``"detection.lam"``."""
        data = self.to_dict()
        for key, value in overrides.items():
            if value is None:
                continue
            section, _, name = key.rpartition(".")
            target = data[section] if section else data
            target[name] = value
        return type(self).from_dict(data)


def load_config(path=None, **overrides):
    """Read a configuration file and apply command-line overrides.

    Parameters
    ----------
    path : str, optional
        JSON file (default all defaults).
    overrides
        Field values taking precedence over the file; None leaves a field
        alone.

    Examples
    --------
    >>> import os, tempfile
    >>> path = os.path.join(tempfile.mkdtemp(), "run.json")
    >>> with open(path, "w") as fobj:
    ...     _ = fobj.write('{"solver": "radon", "detection": {"lam": 0.4}}')
    >>> cfg = load_config(path, **{"detection.lam": 0.2, "gamma": None})
    >>> print(cfg.solver, cfg.detection.lam, cfg.gamma)
    radon 0.2 None
    >>> load_config(path + ".missing")  # doctest: +ELLIPSIS
    Traceback (most recent call last):
    ...
    luslines.errors.MissingFileError: configuration file ... not found
    """
    if path is None:
        cfg = RunConfig()
    else:
        try:
            with open(path) as fobj:
                text = fobj.read()
        except FileNotFoundError:
            raise MissingFileError("configuration file {} not found"
                                   .format(path))
        except OSError as exc:
            raise FormatError("{}: unreadable configuration ({})"
                              .format(path, exc))
        cfg = RunConfig.from_json(text)
    return cfg.overridden(**overrides)


def thread_count(environ=None):
    """Worker threads allowed by ``LUSLINES_THREADS`` (default 1).

    Examples
    --------
    >>> print(thread_count({}), thread_count({"LUSLINES_THREADS": "4"}))
    1 4
    >>> thread_count({"LUSLINES_THREADS": "none"})
    Traceback (most recent call last):
    ...
    luslines.errors.ConfigError: LUSLINES_THREADS: must be a positive integer, got 'none'
    """
    environ = os.environ if environ is None else environ
    text = environ.get("LUSLINES_THREADS", "1")
    try:
        count = int(text)
    except ValueError:
        count = 0
    if count < 1:
        raise ConfigError("LUSLINES_THREADS", "must be a positive integer, "
                          "got {!r}".format(text))
    return count
