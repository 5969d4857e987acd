r"""Synthetic lung-ultrasound frames with known line artifacts.

A phantom holds a bright horizontal pleural line at depth :math:`d_p`,
A-line reverberations at :math:`2 d_p, 3 d_p, \ldots` decaying by a fixed
factor, vertical B-lines running from the pleural line to the bottom and
erasing the A-lines they cross, and optionally Z-lines, short vertical
bands that start at the pleural line but leave the A-lines intact.  Each
horizontal line has a Gaussian vertical profile and each vertical line a
Gaussian horizontal profile.
"""

from __future__ import division
from __future__ import unicode_literals

import json
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from luslines.errors import ConfigError, FormatError, StorageError
from luslines.images import Image

__docformat__ = 'restructuredtext'

__all__ = ["PhantomSpec", "Box", "GroundTruth", "generate_phantom",
           "random_specs"]

_FWHM_TO_SIGMA = 1. / (2 * np.sqrt(2 * np.log(2)))


@dataclass(frozen=True)
class PhantomSpec(object):
    """Description of a synthetic frame.

    Parameters
    ----------
    height, width : int
        Image size in pixels.
    pleural_depth : float
        Depth of the pleural line, between `height` / 4 and `height` / 3.
    bline_columns : tuple of float
        Column centers of the B-lines.
    bline_width : float
        Full width at half maximum of each B-line, in pixels.
    n_alines : int
        Number of A-lines below the pleural line.
    line_amplitude : float
        Peak intensity of the pleural line and the B-lines.
    noise_sigma : float
        Standard deviation of the additive Gaussian noise.
    seed : int
        Seed of the noise generator.
    aline_decay : float
        Amplitude ratio between successive A-lines (default 0.7).
    band_fwhm : float
        Full width at half maximum of horizontal lines (default 3).
    zline_columns : tuple of float
        Column centers of Z-lines (default none).
    zline_length : float, optional
        Length of Z-lines below the pleural line (default half the pleural
        depth, so they end above the first A-line).

    Examples
    --------
    >>> spec = PhantomSpec(height=128, width=160, pleural_depth=20)
    Traceback (most recent call last):
    ...
    luslines.errors.ConfigError: pleural_depth: must lie in [32.0, 42.666666666666664], got 20
    >>> spec = PhantomSpec.from_dict({"height": 128, "width": 160,
    ...                               "pleural_depth": 40, "colour": 1})
    Traceback (most recent call last):
    ...
    luslines.errors.ConfigError: colour: unknown phantom field
    """
    height: int = 128
    width: int = 160
    pleural_depth: float = 40.
    bline_columns: tuple = ()
    bline_width: float = 6.
    n_alines: int = 2
    line_amplitude: float = 0.8
    noise_sigma: float = 0.
    seed: int = 0
    aline_decay: float = 0.7
    band_fwhm: float = 3.
    zline_columns: tuple = ()
    zline_length: float = None

    def __post_init__(self):
        object.__setattr__(self, "bline_columns",
                           tuple(float(c) for c in self.bline_columns))
        object.__setattr__(self, "zline_columns",
                           tuple(float(c) for c in self.zline_columns))
        if self.height < 16 or self.width < 16:
            raise ConfigError("height", "phantoms must be at least 16x16, "
                              "got {}x{}".format(self.height, self.width))
        lo, hi = self.height / 4, self.height / 3
        if not lo <= self.pleural_depth <= hi:
            raise ConfigError("pleural_depth", "must lie in [{}, {}], got {}"
                              .format(lo, hi, self.pleural_depth))
        for name in ("bline_columns", "zline_columns"):
            for column in getattr(self, name):
                if not 0 <= column < self.width:
                    raise ConfigError(name, "column {} outside [0, {})"
                                      .format(column, self.width))
        for name in ("bline_width", "band_fwhm"):
            if not getattr(self, name) > 0:
                raise ConfigError(name, "must be positive")
        if self.n_alines < 0:
            raise ConfigError("n_alines", "must be >= 0")
        if not 0 <= self.line_amplitude <= 1:
            raise ConfigError("line_amplitude", "must lie in [0, 1]")
        if not self.noise_sigma >= 0:
            raise ConfigError("noise_sigma", "must be >= 0")
        if not 0 <= self.aline_decay <= 1:
            raise ConfigError("aline_decay", "must lie in [0, 1]")
        if self.zline_length is not None and not self.zline_length > 0:
            raise ConfigError("zline_length", "must be positive")

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(key, "unknown phantom field")
        return cls(**data)

    def to_dict(self):
        data = asdict(self)
        data["bline_columns"] = list(self.bline_columns)
        data["zline_columns"] = list(self.zline_columns)
        return data


@dataclass(frozen=True)
class Box(object):
    """Horizontal extent of an annotated line artifact."""
    x_min: int
    x_max: int
    kind: str = "B"

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise FormatError("box needs x_min < x_max, got [{}, {}]"
                              .format(self.x_min, self.x_max))
        if self.kind not in ("pleural", "A", "B"):
            raise FormatError("unknown box kind {!r}".format(self.kind))

    @property
    def center(self):
        return (self.x_min + self.x_max) / 2.

    @property
    def half_width(self):
        return (self.x_max - self.x_min) / 2.


@dataclass(frozen=True)
class GroundTruth(object):
    """Annotated boxes of one frame.

    Examples
    --------
    >>> gt = GroundTruth.from_json('{"boxes": [{"x_min": 34, "x_max": 46}]}')
    >>> gt.boxes
    (Box(x_min=34, x_max=46, kind='B'),)
    >>> print(gt.to_json())
    {"boxes": [{"x_min": 34, "x_max": 46, "kind": "B"}]}
    >>> GroundTruth.from_json('{"boxes": [{"x_min": 4, "x_max": 4}]}')
    Traceback (most recent call last):
    ...
    luslines.errors.FormatError: box needs x_min < x_max, got [4, 4]
    """
    boxes: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "boxes", tuple(self.boxes))

    def of_kind(self, kind="B"):
        return [box for box in self.boxes if box.kind == kind]

    def to_json(self):
        return json.dumps({"boxes": [asdict(box) for box in self.boxes]})

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
            boxes = [Box(int(item["x_min"]), int(item["x_max"]),
                         item.get("kind", "B"))
                     for item in data["boxes"]]
        except (ValueError, KeyError, TypeError) as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError("malformed ground truth ({})".format(exc))
        return cls(boxes)

    def save(self, path):
        try:
            with open(path, "w") as fobj:
                fobj.write(self.to_json())
        except OSError as exc:
            raise StorageError("{}: cannot write ground truth ({})"
                               .format(path, exc))

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fobj:
                text = fobj.read()
        except OSError as exc:
            raise FormatError("{}: unreadable ground truth ({})"
                              .format(path, exc))
        try:
            return cls.from_json(text)
        except FormatError as exc:
            raise FormatError("{}: {}".format(path, exc))


def _profile(coordinate, center, fwhm):
    sigma = fwhm * _FWHM_TO_SIGMA
    return np.exp(-0.5 * ((coordinate - center) / sigma)**2)


def generate_phantom(spec):
    """Render the frame described by `spec` and its ground truth.

    Parameters
    ----------
    spec : :class:`PhantomSpec`

    Returns
    -------
    image : :class:`~luslines.images.Image`
    truth : :class:`GroundTruth`
        One box ``(column - bline_width, column + bline_width)`` per
        B-line, clipped to the image.

    Examples
    --------
    >>> spec = PhantomSpec(height=128, width=160, pleural_depth=32,
    ...                    n_alines=1)
    >>> img, truth = generate_phantom(spec)
    >>> profile = img.pixels.mean(axis=1)
    >>> print(np.argmax(profile[:48]), 48 + np.argmax(profile[48:]))
    32 64
    >>> print(np.ptp(img.pixels, axis=1).max() == 0., truth.boxes)
    True ()

    B-lines run from the pleural line to the bottom.

    >>> spec = PhantomSpec(pleural_depth=40, bline_columns=[80])
    >>> img, truth = generate_phantom(spec)
    >>> print(img.pixels[100, 80] - img.pixels[100, 10] >= 0.5 * 0.8)
    True
    >>> truth.boxes
    (Box(x_min=74, x_max=86, kind='B'),)

    Noise is reproducible by seed.

    >>> noisy = PhantomSpec(bline_columns=[80], noise_sigma=0.1, seed=3)
    >>> a, _ = generate_phantom(noisy)
    >>> b, _ = generate_phantom(noisy)
    >>> print(np.array_equal(a.pixels, b.pixels), a.pixels.min() >= 0.)
    True True
    """
    rows = np.arange(spec.height, dtype=float)[:, np.newaxis]
    cols = np.arange(spec.width, dtype=float)[np.newaxis, :]
    amplitude = spec.line_amplitude

    horizontal = amplitude * _profile(rows, spec.pleural_depth,
                                      spec.band_fwhm)
    alines = np.zeros((spec.height, 1))
    for n in range(1, spec.n_alines + 1):
        depth = (n + 1) * spec.pleural_depth
        if depth > spec.height - 1:
            break
        alines = alines + (amplitude * spec.aline_decay**n
                           * _profile(rows, depth, spec.band_fwhm))

    below = (rows >= spec.pleural_depth)
    blines = np.zeros((1, spec.width))
    for column in spec.bline_columns:
        blines = np.maximum(blines, _profile(cols, column, spec.bline_width))
    blines = blines * below

    zlength = spec.zline_length
    if zlength is None:
        zlength = spec.pleural_depth / 2.
    zlines = np.zeros((1, spec.width))
    for column in spec.zline_columns:
        zlines = np.maximum(zlines, _profile(cols, column, spec.bline_width))
    zlines = zlines * below * (rows < spec.pleural_depth + zlength)

    pixels = (horizontal
              + alines * (1. - blines)
              + amplitude * blines
              + amplitude * zlines)
    pixels = np.broadcast_to(pixels, (spec.height, spec.width))

    if spec.noise_sigma > 0:
        rng = np.random.default_rng(spec.seed)
        pixels = pixels + rng.normal(0., spec.noise_sigma, pixels.shape)

    boxes = []
    for column in spec.bline_columns:
        x_min = int(max(0, np.floor(column - spec.bline_width)))
        x_max = int(min(spec.width - 1, np.ceil(column + spec.bline_width)))
        boxes.append(Box(x_min, x_max, "B"))

    return Image(np.clip(pixels, 0., 1.)), GroundTruth(boxes)


def random_specs(count, height=128, width=160, noise_sigma=0.,
                 max_blines=3, separation=16, seed=0, **kwargs):
    """Draw `count` phantom descriptions with 1 to `max_blines` B-lines.

    B-line columns keep `separation` pixels from each other and from the
    image sides.  Pleural depths are drawn from the admissible range.
    Extra keyword arguments are passed to every :class:`PhantomSpec`.

    Raises
    ------
    ~luslines.errors.ConfigError
        If `max_blines` columns `separation` apart do not fit in the width.

    Examples
    --------
    >>> specs = random_specs(20, seed=1)
    >>> print(len(specs), len({spec.seed for spec in specs}))
    20 20
    >>> gaps = [np.diff(sorted(s.bline_columns)).min()
    ...         for s in specs if len(s.bline_columns) > 1]
    >>> print(min(gaps) >= 16)
    True
    >>> random_specs(20, seed=1) == specs
    True

    Three columns 16 pixels apart need at least 65 columns of room.

    >>> specs = random_specs(50, height=64, width=65, seed=2)
    >>> print(all(16 <= s.bline_columns[0] and s.bline_columns[-1] < 49
    ...           for s in specs), max(len(s.bline_columns) for s in specs))
    True 3
    >>> random_specs(5, height=64, width=40, max_blines=3, seed=0)
    Traceback (most recent call last):
    ...
    luslines.errors.ConfigError: max_blines: 3 B-lines 16 px apart do not fit in a width of 40
    >>> random_specs(5, width=32)
    Traceback (most recent call last):
    ...
    luslines.errors.ConfigError: max_blines: 3 B-lines 16 px apart do not fit in a width of 32
    """
    if max_blines < 1:
        raise ConfigError("max_blines", "must be >= 1, got {}"
                          .format(max_blines))
    if separation < 1:
        raise ConfigError("separation", "must be >= 1, got {}"
                          .format(separation))
    first = separation
    room = width - 2 * separation
    if room < (max_blines - 1) * separation + 1:
        raise ConfigError("max_blines", "{} B-lines {} px apart do not fit "
                          "in a width of {}".format(max_blines, separation,
                                                    width))

    rng = np.random.default_rng(seed)
    specs = []
    for index in range(count):
        n_blines = int(rng.integers(1, max_blines + 1))
        # n sorted draws from the room left once the gaps are set aside
        slack = room - (n_blines - 1) * (separation - 1)
        draws = np.sort(rng.choice(slack, size=n_blines, replace=False))
        columns = first + draws + np.arange(n_blines) * (separation - 1)
        depth = float(rng.integers(int(np.ceil(height / 4)),
                                   int(np.floor(height / 3)) + 1))
        specs.append(PhantomSpec(height=height, width=width,
                                 pleural_depth=depth,
                                 bline_columns=tuple(int(column)
                                                     for column in columns),
                                 noise_sigma=noise_sigma,
                                 seed=int(seed * 1000 + index),
                                 **kwargs))
    return specs
