r"""Identification of the pleural line, A-lines and B-lines.

Lines of a frame are peaks of its (restored) Radon transform.  The search
proceeds in four steps:

1. the pleural line is the brightest peak with a near-horizontal normal
   (:math:`90^\circ \pm 20^\circ`) at depths between :math:`H/4` and
   :math:`H/3`;
2. the frame above the pleural line is blanked, and the Radon transform of
   the dimmed frame is restored again;
3. A-lines are the brightest near-horizontal peak in the reverberation
   window below the pleural line whose intensity is at least
   :math:`\lambda` times the pleural intensity, and B-line candidates are
   all near-vertical peaks (:math:`0^\circ \pm 10^\circ`);
4. candidates across which an A-line persists are Z-lines and are
   discarded.

Examples
--------
>>> from luslines.images import Geometry
>>> from luslines.phantom import PhantomSpec, generate_phantom
>>> spec = PhantomSpec(pleural_depth=40, bline_columns=[40, 80, 120])
>>> img, truth = generate_phantom(spec)
>>> result = detect_pipeline(img, Geometry.default(128, 160), solver="radon")
>>> print(result.pleural_found, result.n_blines, len(result.alines))
True 3 1
>>> xs = sorted(line.spatial_x for line in result.blines)
>>> print([abs(x - box.center) <= 2 for x, box in zip(xs, truth.boxes)])
[True, True, True]
"""

from __future__ import division
from __future__ import unicode_literals

import json
import logging
from collections import namedtuple
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from scipy import ndimage

from luslines.cauchy import default_gamma
from luslines.cpsSolver import cps_solve
from luslines.ducps import ducps_forward
from luslines.errors import (ConfigError, DimensionError, ParameterError,
                             PleuralNotFoundError)
from luslines.images import Image, Sinogram
from luslines.radon import forward_radon

__docformat__ = 'restructuredtext'

__all__ = ["Peak", "Detection", "SearchBand", "DetectionKnobs",
           "DetectionResult", "local_maxima", "line_column", "line_depth",
           "detect_pleural", "dim_above_pleural", "detect_alines",
           "detect_bline_candidates", "filter_zlines", "restore",
           "detect_pipeline"]

_log = logging.getLogger(__name__)

Peak = namedtuple("Peak", ["r", "omega", "value"])

_SOLVERS = ("cps", "ducps", "radon")
_ALINE_BANDS = ("reverberation", "centered")


@dataclass(frozen=True)
class Detection(object):
    """A line found in the Radon domain.

    Parameters
    ----------
    kind : {"pleural", "A", "B"}
    r : float
        Signed offset of the line.
    omega : float
        Angle of its normal in degrees, in [0, 180).
    intensity : float
        Value of the restored sinogram at the peak.
    spatial_x : float, optional
        Column of a B-line halfway between the pleural line and the bottom.
    spatial_depth : float, optional
        Depth of a horizontal line at the center column.
    """
    kind: str
    r: float
    omega: float
    intensity: float
    spatial_x: float = None
    spatial_depth: float = None

    def to_dict(self):
        if self.kind == "B":
            return {"x": int(round(self.spatial_x)), "r": self.r,
                    "omega": self.omega, "intensity": self.intensity}
        return {"depth": self.spatial_depth, "r": self.r,
                "omega": self.omega, "intensity": self.intensity}


@dataclass(frozen=True)
class SearchBand(object):
    """Rectangle of the Radon domain searched for peaks.

    Angles run from `omega_lo` to `omega_hi` inclusive.  A negative
    `omega_lo` wraps around: angles :math:`\\omega - 180^\\circ` of the grid
    are searched with their offsets negated, which describes the same
    lines.

    Parameters
    ----------
    omega_lo, omega_hi : float
        Angle range in degrees.
    r_lo, r_hi : float
        Offset range.
    detrend : bool
        Whether to subtract from every angle its median over the offset
        range before searching (default False).
    """
    omega_lo: float
    omega_hi: float
    r_lo: float
    r_hi: float
    detrend: bool = False

    def __post_init__(self):
        if not self.r_lo <= self.r_hi:
            raise ParameterError("band needs r_lo <= r_hi, got [{}, {}]"
                                 .format(self.r_lo, self.r_hi))
        if not (-180 < self.omega_lo <= self.omega_hi < 180):
            raise ParameterError("band angles [{}, {}] out of range"
                                 .format(self.omega_lo, self.omega_hi))

    @property
    def wraps(self):
        return self.omega_lo < 0


@dataclass(frozen=True)
class DetectionKnobs(object):
    """Tuning of the line search.

    Parameters
    ----------
    nms_radius : int
        Half-size, in cells, of the neighbourhood a peak must dominate and
        of the suppression window (default 3).
    floor_frac : float
        Peaks below this fraction of the band maximum are ignored
        (default 0.3).
    lam : float
        A-lines must reach `lam` times the pleural intensity (default 0.3).
    guard : float
        Rows kept above the pleural line when dimming (default 2).
    aline_band : {"reverberation", "centered"}
        A-line window: depths 1.5 to 2.5 times the pleural depth, or offsets
        :math:`[H/2 - 3 H_p / 2, H/2]` with :math:`H_p` the pleural offset
        magnitude (default "reverberation").
    horizontal_halfwidth, vertical_halfwidth : float
        Angular half-widths of the horizontal and vertical bands (default
        20 and 10 degrees).
    zline_patch : int
        Side of the square patch sampled at crossings (default 5).
    zline_factor : float
        Fraction of the A-line contrast above which the A-line persists
        (default 0.5).
    zline_offset : float, optional
        Distance above and below the A-line of the reference patches
        (default twice `zline_patch`).

    Examples
    --------
    >>> DetectionKnobs(lam=1.5)
    Traceback (most recent call last):
    ...
    luslines.errors.ConfigError: lam: must lie in [0, 1], got 1.5
    """
    nms_radius: int = 3
    floor_frac: float = 0.3
    lam: float = 0.3
    guard: float = 2.
    aline_band: str = "reverberation"
    horizontal_halfwidth: float = 20.
    vertical_halfwidth: float = 10.
    zline_patch: int = 5
    zline_factor: float = 0.5
    zline_offset: float = None

    def __post_init__(self):
        if not self.nms_radius >= 1:
            raise ConfigError("nms_radius", "must be >= 1, got {}"
                              .format(self.nms_radius))
        for name in ("floor_frac", "lam"):
            value = getattr(self, name)
            if not 0 <= value <= 1:
                raise ConfigError(name, "must lie in [0, 1], got {}"
                                  .format(value))
        if not self.guard >= 0:
            raise ConfigError("guard", "must be >= 0, got {}"
                              .format(self.guard))
        if self.aline_band not in _ALINE_BANDS:
            raise ConfigError("aline_band", "must be one of {}, got {!r}"
                              .format(_ALINE_BANDS, self.aline_band))
        if not 0 < self.horizontal_halfwidth < 90:
            raise ConfigError("horizontal_halfwidth", "must lie in (0, 90)")
        if not 0 < self.vertical_halfwidth < 90:
            raise ConfigError("vertical_halfwidth", "must lie in (0, 90)")
        if not self.zline_patch >= 1:
            raise ConfigError("zline_patch", "must be >= 1")
        if not self.zline_factor >= 0:
            raise ConfigError("zline_factor", "must be >= 0")
        if self.zline_offset is not None and not self.zline_offset > 0:
            raise ConfigError("zline_offset", "must be positive")

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(key, "unknown detection field")
        return cls(**data)

    def to_dict(self):
        return asdict(self)

    @property
    def offset(self):
        if self.zline_offset is None:
            return 2. * self.zline_patch
        return self.zline_offset


@dataclass(frozen=True)
class DetectionResult(object):
    """Lines identified in one frame.

    `pleural_found` is False when no pleural line was found, in which case
    every list is empty.
    """
    pleural: Detection = None
    alines: tuple = ()
    blines: tuple = ()
    candidates: tuple = field(default=(), repr=False)

    def __post_init__(self):
        object.__setattr__(self, "alines", tuple(self.alines))
        object.__setattr__(self, "blines", tuple(self.blines))
        object.__setattr__(self, "candidates", tuple(self.candidates))

    @property
    def pleural_found(self):
        return self.pleural is not None

    @property
    def n_blines(self):
        return len(self.blines)

    @property
    def detections(self):
        found = [] if self.pleural is None else [self.pleural]
        return found + list(self.alines) + list(self.blines)

    def to_dict(self):
        return {"pleural": (None if self.pleural is None
                            else self.pleural.to_dict()),
                "alines": [line.to_dict() for line in self.alines],
                "blines": [line.to_dict() for line in self.blines],
                "pleural_found": self.pleural_found,
                "n_blines": self.n_blines}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


def _column(r, omega, depth, height, width):
    theta = np.deg2rad(omega)
    j = depth - (height - 1) / 2.
    i = (r - j * np.sin(theta)) / np.cos(theta)
    return i + (width - 1) / 2.


def line_column(r, omega, depth, geo):
    """Column at which the line `(r, omega)` crosses row `depth`.

    Examples
    --------
    >>> from luslines.images import Geometry
    >>> geo = Geometry.default(128, 160)
    >>> print(line_column(0.5, 0., 100., geo))
    80.0
    >>> print(np.isclose(line_column(12., 175., 90., geo),
    ...                  line_column(-12., -5., 90., geo)))
    True
    """
    return float(_column(r, omega, depth, geo.image_h, geo.image_w))


def line_depth(r, omega, column, geo):
    """Row at which the line `(r, omega)` crosses `column`."""
    theta = np.deg2rad(omega)
    i = column - (geo.image_w - 1) / 2.
    j = (r - i * np.cos(theta)) / np.sin(theta)
    return float(j + (geo.image_h - 1) / 2.)


def _band_grid(s, band):
    """Values of `s` inside `band`, as stored and as searched, with the
    offset and angle of each cell."""
    geo = s.geometry
    offsets, angles = geo.offsets, geo.angles
    rows = np.flatnonzero((offsets >= band.r_lo) & (offsets <= band.r_hi))
    direct = np.flatnonzero((angles >= band.omega_lo)
                            & (angles <= band.omega_hi))
    if band.wraps:
        wrapped = np.flatnonzero(angles - 180. >= band.omega_lo)
    else:
        wrapped = np.array([], dtype=int)
    if rows.size == 0 or direct.size + wrapped.size == 0:
        raise DimensionError("search band is empty on this grid")

    values = np.concatenate([s.values[::-1][:, wrapped],
                             s.values[:, direct]], axis=1)[rows]
    mirrored = np.r_[np.ones(wrapped.size, bool), np.zeros(direct.size, bool)]
    columns = np.r_[wrapped, direct]
    searched = values
    if band.detrend:
        searched = values - np.median(values, axis=0, keepdims=True)
    return values, searched, offsets[rows], angles[columns], mirrored


def _dominant(values, radius):
    """Cells at least as large as every neighbour within `radius` cells,
    larger than those preceding them and than the smallest one.

    Of a plateau only its first cell survives.

    >>> values = np.zeros((3, 6))
    >>> values[1, 2:4] = 3.
    >>> values[0, 5] = 1.
    >>> np.argwhere(_dominant(values, 1)).tolist()
    [[0, 5], [1, 2]]
    >>> print(_dominant(np.ones((3, 3)), 1).any())
    False
    """
    size = 2 * radius + 1
    around = np.ones((size, size), dtype=bool)
    around[radius, radius] = False
    before = np.zeros((size, size), dtype=bool)
    before.flat[:radius * size + radius] = True
    highest = ndimage.maximum_filter(values, footprint=around,
                                     mode='constant', cval=-np.inf)
    earlier = ndimage.maximum_filter(values, footprint=before,
                                     mode='constant', cval=-np.inf)
    lowest = ndimage.minimum_filter(values, footprint=around,
                                    mode='constant', cval=np.inf)
    return (values >= highest) & (values > earlier) & (values > lowest)


def local_maxima(s, band, nms_radius=3, floor_frac=0.3):
    """Peaks of `s` inside `band`, brightest first.

    Parameters
    ----------
    s : :class:`~luslines.images.Sinogram`
    band : :class:`SearchBand`
    nms_radius : int
        Neighbourhood half-size and suppression distance in cells.
    floor_frac : float
        Fraction of the band maximum below which peaks are ignored.  The
        maximum is taken before detrending.

    Returns
    -------
    list of :class:`Peak`
        Ties in value are ordered by offset, then angle.

    Examples
    --------
    >>> from luslines.images import Geometry
    >>> geo = Geometry.default(16, 16, angle_step=18.)
    >>> everywhere = SearchBand(0., 179., geo.r_min, geo.r_max)
    >>> values = np.zeros(geo.shape)
    >>> values[10, 3] = 5.
    >>> local_maxima(Sinogram(geo, values), everywhere)
    [Peak(r=-2.0, omega=54.0, value=5.0)]
    >>> values[10, 3] = 0.
    >>> values[15, 7] = values[5, 2] = 3.
    >>> local_maxima(Sinogram(geo, values), everywhere)
    [Peak(r=-7.0, omega=36.0, value=3.0), Peak(r=3.0, omega=126.0, value=3.0)]

    Flat grids have no peaks.

    >>> local_maxima(Sinogram(geo, np.ones(geo.shape)), everywhere)
    []
    >>> local_maxima(Sinogram(geo, values), SearchBand(0., 10., 20., 30.))
    Traceback (most recent call last):
    ...
    luslines.errors.DimensionError: search band is empty on this grid
    """
    raw, values, offsets, angles, mirrored = _band_grid(s, band)
    top = raw.max()
    if not top > 0:
        return []
    keep = (_dominant(values, nms_radius)
            & (values >= floor_frac * top) & (values > 0))
    cells = sorted((tuple(cell) for cell in np.argwhere(keep)),
                   key=lambda cell: (-values[cell], cell[0], cell[1]))

    chosen = []
    for a, b in cells:
        if all(max(abs(a - ka), abs(b - kb)) > nms_radius
               for ka, kb in chosen):
            chosen.append((a, b))

    peaks = []
    for a, b in chosen:
        r, omega = float(offsets[a]), float(angles[b])
        if mirrored[b]:
            r = -r
        peaks.append(Peak(r=r + 0., omega=omega, value=float(values[a, b])))
    return peaks


def _knobs(knobs):
    return DetectionKnobs() if knobs is None else knobs


def _horizontal(r, omega, value, kind, geo):
    depth = line_depth(r, omega, (geo.image_w - 1) / 2., geo)
    return Detection(kind=kind, r=r, omega=omega, intensity=value,
                     spatial_depth=depth)


def detect_pleural(s, knobs=None):
    """The brightest near-horizontal peak between depths H/4 and H/3.

    Parameters
    ----------
    s : :class:`~luslines.images.Sinogram`
        Restored Radon transform of the frame.
    knobs : :class:`DetectionKnobs`, optional

    Returns
    -------
    :class:`Detection`

    Raises
    ------
    ~luslines.errors.PleuralNotFoundError
        If the band holds no peak.

    Examples
    --------
    >>> from luslines.images import Geometry
    >>> from luslines.phantom import PhantomSpec, generate_phantom
    >>> geo = Geometry.default(128, 160)
    >>> img, _ = generate_phantom(PhantomSpec(pleural_depth=40,
    ...                                       bline_columns=[80]))
    >>> pleural = detect_pleural(forward_radon(img, geo))
    >>> print(pleural.kind, pleural.omega, abs(pleural.spatial_depth - 40) <= 2)
    pleural 90.0 True

    Of two lines in the band the brighter wins.

    >>> pixels = np.zeros((128, 160))
    >>> pixels[34], pixels[40] = 1., 0.5
    >>> pleural = detect_pleural(forward_radon(Image(pixels), geo))
    >>> print(abs(pleural.spatial_depth - 34) <= 1)
    True
    >>> detect_pleural(forward_radon(Image(np.zeros((128, 160))), geo))
    Traceback (most recent call last):
    ...
    luslines.errors.PleuralNotFoundError: no peak in the pleural search band
    """
    knobs = _knobs(knobs)
    geo = s.geometry
    H = geo.image_h
    band = SearchBand(omega_lo=90. - knobs.horizontal_halfwidth,
                      omega_hi=90. + knobs.horizontal_halfwidth,
                      r_lo=geo.depth_to_r(H / 4.),
                      r_hi=geo.depth_to_r(H / 3.))
    peaks = local_maxima(s, band, knobs.nms_radius, knobs.floor_frac)
    if not peaks:
        raise PleuralNotFoundError("no peak in the pleural search band")
    r, omega, value = peaks[0]
    return _horizontal(r, omega, value, "pleural", geo)


def dim_above_pleural(y, pleural, guard=2.):
    """Blank the rows more than `guard` pixels above the pleural line.

    Examples
    --------
    >>> bright = Image(np.ones((32, 32)))
    >>> pleural = Detection("pleural", r=0.5, omega=90., intensity=32.,
    ...                     spatial_depth=16.)
    >>> dimmed = dim_above_pleural(bright, pleural)
    >>> print(np.flatnonzero(dimmed.pixels[:, 0] == 0).max(),
    ...       dimmed.pixels[14:].min())
    13 1.0
    >>> top = Detection("pleural", r=-15.5, omega=90., intensity=32.,
    ...                 spatial_depth=0.)
    >>> print(np.array_equal(dim_above_pleural(bright, top).pixels,
    ...                      bright.pixels))
    True

    Dimming lowers the Radon transform of a phantom.

    >>> from luslines.images import Geometry
    >>> from luslines.phantom import PhantomSpec, generate_phantom
    >>> geo = Geometry.default(128, 160)
    >>> img, _ = generate_phantom(PhantomSpec(pleural_depth=40))
    >>> before = forward_radon(img, geo).values
    >>> after = forward_radon(dim_above_pleural(img, Detection(
    ...     "pleural", r=-23.5, omega=90., intensity=1.,
    ...     spatial_depth=40.)), geo).values
    >>> print(after.sum() < before.sum(), np.all(after <= before))
    True True
    """
    pixels = np.array(y.pixels)
    cut = int(np.ceil(pleural.spatial_depth - guard))
    pixels[:max(cut, 0)] = 0.
    return Image(pixels)


def detect_alines(s_dim, pleural, knobs=None):
    """The brightest validated A-line below the pleural line.

    Parameters
    ----------
    s_dim : :class:`~luslines.images.Sinogram`
        Restored Radon transform of the dimmed frame.
    pleural : :class:`Detection`
    knobs : :class:`DetectionKnobs`, optional

    Returns
    -------
    list of :class:`Detection`
        Empty, or the single A-line whose intensity is at least
        ``knobs.lam`` times the pleural intensity.

    Examples
    --------
    >>> from luslines.images import Geometry
    >>> from luslines.phantom import PhantomSpec, generate_phantom
    >>> geo = Geometry.default(128, 160)
    >>> img, _ = generate_phantom(PhantomSpec(pleural_depth=40, n_alines=2))
    >>> pleural = detect_pleural(forward_radon(img, geo))
    >>> s_dim = forward_radon(dim_above_pleural(img, pleural), geo)
    >>> alines = detect_alines(s_dim, pleural)
    >>> print(len(alines), abs(alines[0].spatial_depth - 80) <= 2)
    1 True
    >>> detect_alines(s_dim, pleural, DetectionKnobs(lam=1.))
    []
    >>> print(len(detect_alines(s_dim, pleural, DetectionKnobs(lam=0.))))
    1

    The centered window lies lower and finds the second reverberation.

    >>> centered = detect_alines(s_dim, pleural,
    ...                          DetectionKnobs(aline_band="centered"))
    >>> print(abs(centered[0].spatial_depth - 120) <= 2)
    True
    """
    knobs = _knobs(knobs)
    geo = s_dim.geometry
    H = geo.image_h
    if knobs.aline_band == "centered":
        H_p = abs(pleural.r)
        r_lo, r_hi = H / 2. - 1.5 * H_p, H / 2.
    else:
        depth = pleural.spatial_depth
        r_lo = geo.depth_to_r(min(1.5 * depth, H - 1.))
        r_hi = geo.depth_to_r(min(2.5 * depth, H - 1.))
    r_lo, r_hi = max(r_lo, geo.r_min), min(r_hi, geo.r_max)
    if not r_lo <= r_hi:
        return []
    band = SearchBand(omega_lo=90. - knobs.horizontal_halfwidth,
                      omega_hi=90. + knobs.horizontal_halfwidth,
                      r_lo=r_lo, r_hi=r_hi)
    try:
        peaks = local_maxima(s_dim, band, knobs.nms_radius, knobs.floor_frac)
    except DimensionError:
        return []
    threshold = knobs.lam * pleural.intensity
    for r, omega, value in peaks:
        if value >= threshold:
            return [_horizontal(r, omega, value, "A", geo)]
    return []


def detect_bline_candidates(s_dim, pleural=None, knobs=None):
    """Near-vertical peaks of the dimmed frame.

    Parameters
    ----------
    s_dim : :class:`~luslines.images.Sinogram`
        Restored Radon transform of the dimmed frame.
    pleural : :class:`Detection`, optional
        Sets the depth at which `spatial_x` is taken, halfway between the
        pleural line and the bottom (default the middle of the frame).
    knobs : :class:`DetectionKnobs`, optional

    Returns
    -------
    list of :class:`Detection`

    Examples
    --------
    >>> from luslines.images import Geometry
    >>> from luslines.phantom import PhantomSpec, generate_phantom
    >>> geo = Geometry.default(128, 160)
    >>> img, truth = generate_phantom(PhantomSpec(
    ...     pleural_depth=40, bline_columns=[40, 80, 120]))
    >>> pleural = detect_pleural(forward_radon(img, geo))
    >>> s_dim = forward_radon(dim_above_pleural(img, pleural), geo)
    >>> xs = sorted(c.spatial_x for c in detect_bline_candidates(s_dim, pleural))
    >>> print(len(xs), all(abs(x - c) <= 2 for x, c in zip(xs, (40, 80, 120))))
    3 True

    Horizontal structure alone gives no candidate.

    >>> img, _ = generate_phantom(PhantomSpec(pleural_depth=40))
    >>> detect_bline_candidates(forward_radon(img, geo))
    []
    """
    knobs = _knobs(knobs)
    geo = s_dim.geometry
    half = geo.image_w / 2.
    band = SearchBand(omega_lo=-knobs.vertical_halfwidth,
                      omega_hi=knobs.vertical_halfwidth,
                      r_lo=-half, r_hi=half, detrend=True)
    if pleural is None:
        depth = (geo.image_h - 1) / 2.
    else:
        depth = (pleural.spatial_depth + geo.image_h - 1) / 2.
    candidates = []
    for r, omega, value in local_maxima(s_dim, band, knobs.nms_radius,
                                        knobs.floor_frac):
        candidates.append(Detection(kind="B", r=r, omega=omega,
                                    intensity=value,
                                    spatial_x=line_column(r, omega, depth,
                                                          geo)))
    return candidates


def _patch_mean(pixels, row, col_lo, col_hi, half):
    """Mean of rows ``row - half .. row + half`` and columns ``col_lo ..
    col_hi``, or None if the rows leave the frame."""
    row = int(round(row))
    if row - half < 0 or row + half >= pixels.shape[0]:
        return None
    col_lo = max(int(round(col_lo)), 0)
    col_hi = min(int(round(col_hi)), pixels.shape[1] - 1)
    if col_lo > col_hi:
        return None
    return float(pixels[row - half:row + half + 1, col_lo:col_hi + 1].mean())


def _contrast(pixels, row, col_lo, col_hi, half, offset, column_at=None):
    """Patch mean at `row` minus the smaller of the means `offset` rows
    above and below."""
    def mean_at(depth):
        if column_at is None:
            return _patch_mean(pixels, depth, col_lo, col_hi, half)
        center = column_at(depth)
        return _patch_mean(pixels, depth, center - half, center + half, half)

    here = mean_at(row)
    around = [mean for mean in (mean_at(row - offset), mean_at(row + offset))
              if mean is not None]
    if here is None or not around:
        return None
    return here - min(around)


def filter_zlines(candidates, alines, y_dim, pleural=None, knobs=None):
    """Discard candidates across which an A-line persists.

    At the depth of every A-line a square patch centered on the candidate
    is compared with the patches `knobs.offset` rows above and below along
    the candidate.  If that local contrast reaches ``knobs.zline_factor``
    times the contrast of the A-line over the whole row, the A-line was not
    erased and the candidate is a Z-line.

    Examples
    --------
    >>> from luslines.images import Geometry
    >>> from luslines.phantom import PhantomSpec, generate_phantom
    >>> geo = Geometry.default(128, 160)
    >>> img, _ = generate_phantom(PhantomSpec(
    ...     pleural_depth=40, n_alines=1, bline_columns=[80],
    ...     zline_columns=[40]))
    >>> pleural = Detection("pleural", r=-23.5, omega=90., intensity=1.,
    ...                     spatial_depth=40.)
    >>> dimmed = dim_above_pleural(img, pleural)
    >>> aline = Detection("A", r=16.5, omega=90., intensity=1.,
    ...                   spatial_depth=80.)
    >>> cands = [Detection("B", r=x - 79.5, omega=0., intensity=1.,
    ...                    spatial_x=float(x)) for x in (40, 80)]
    >>> [c.spatial_x for c in filter_zlines(cands, [aline], dimmed, pleural)]
    [80.0]
    >>> filter_zlines(cands, [], dimmed, pleural) == cands
    True
    """
    knobs = _knobs(knobs)
    if not alines:
        return list(candidates)
    pixels = y_dim.pixels
    height, width = pixels.shape
    half = knobs.zline_patch // 2

    survivors = []
    for candidate in candidates:
        def column_at(depth, line=candidate):
            return _column(line.r, line.omega, depth, height, width)
        persists = False
        for aline in alines:
            depth = aline.spatial_depth
            row = _contrast(pixels, depth, 0, width - 1, half, knobs.offset)
            if row is None or not row > 0:
                continue
            local = _contrast(pixels, depth, None, None, half, knobs.offset,
                              column_at=column_at)
            if local is not None and local >= knobs.zline_factor * row:
                persists = True
                break
        if persists:
            _log.debug("Z-line rejected at x=%.1f", candidate.spatial_x)
        else:
            survivors.append(candidate)
    return survivors


def restore(y, geo, solver="cps", params=None, gamma=None, max_iter=500,
            tol=1e-3):
    """Restored Radon transform of `y`.

    Parameters
    ----------
    y : :class:`~luslines.images.Image`
    geo : :class:`~luslines.images.Geometry`
    solver : {"cps", "ducps", "radon"}
        Cauchy proximal splitting to tolerance, the unrolled network with
        `params`, or the plain forward projection.
    params : :class:`~luslines.ducps.DucpsParams`, optional
        Needed by "ducps".
    gamma : float, optional
        Cauchy scale (default a tenth of the peak of the forward
        projection of `y`).
    max_iter, tol
        Passed to :func:`~luslines.cpsSolver.cps_solve`.

    Examples
    --------
    >>> from luslines.images import Geometry
    >>> geo = Geometry.default(16, 16, angle_step=18.)
    >>> restore(Image(np.zeros((16, 16))), geo, solver="ducps")
    Traceback (most recent call last):
    ...
    luslines.errors.ParameterError: solver 'ducps' needs parameters
    """
    if solver not in _SOLVERS:
        raise ParameterError("solver must be one of {}, got {!r}"
                             .format(_SOLVERS, solver))
    if solver == "cps":
        x, _ = cps_solve(y, geo, gamma=gamma, max_iter=max_iter, tol=tol)
        return x
    r0 = forward_radon(y, geo)
    if solver == "radon":
        return r0
    if params is None:
        raise ParameterError("solver 'ducps' needs parameters")
    scale = gamma if gamma is not None else default_gamma(r0)
    x, _ = ducps_forward(r0, r0, params.with_gamma(scale))
    return x


def detect_pipeline(y, geo, solver="cps", params=None, knobs=None,
                    gamma=None, name=None, **solver_args):
    """Identify the pleural line, A-lines and B-lines of a frame.

    Parameters
    ----------
    y : :class:`~luslines.images.Image`
    geo : :class:`~luslines.images.Geometry`
    solver, params, gamma, solver_args
        Restoration settings, see :func:`restore`.
    knobs : :class:`DetectionKnobs`, optional
    name : str, optional
        Name of the frame in log messages.

    Returns
    -------
    :class:`DetectionResult`

    Examples
    --------
    A blank frame has no pleural line, hence no detections.

    >>> from luslines.images import Geometry
    >>> geo = Geometry.default(64, 80, angle_step=2.)
    >>> result = detect_pipeline(Image(np.zeros((64, 80))), geo)
    >>> print(result.pleural_found, result.detections)
    False []

    Restoration by proximal splitting keeps the lines of a phantom.

    >>> from luslines.phantom import PhantomSpec, generate_phantom
    >>> img, _ = generate_phantom(PhantomSpec(
    ...     height=64, width=80, pleural_depth=20, bline_columns=[50],
    ...     n_alines=1))
    >>> result = detect_pipeline(img, geo, max_iter=50)
    >>> print(result.pleural_found, result.n_blines,
    ...       abs(result.blines[0].spatial_x - 50) <= 2)
    True 1 True
    >>> detect_pipeline(img, geo, max_iter=50).to_json() == result.to_json()
    True

    Raising the peak floor never adds B-lines.

    >>> noisy, _ = generate_phantom(PhantomSpec(
    ...     height=64, width=80, pleural_depth=20, bline_columns=[20, 50],
    ...     noise_sigma=0.1, seed=2))
    >>> counts = [detect_pipeline(noisy, geo, solver="radon",
    ...                           knobs=DetectionKnobs(floor_frac=f)).n_blines
    ...           for f in (0.1, 0.3, 0.6)]
    >>> print(counts == sorted(counts, reverse=True))
    True
    """
    knobs = _knobs(knobs)
    s = restore(y, geo, solver=solver, params=params, gamma=gamma,
                **solver_args)
    try:
        pleural = detect_pleural(s, knobs)
    except PleuralNotFoundError:
        _log.warning("%s: pleural line not found", name or "image")
        return DetectionResult()

    y_dim = dim_above_pleural(y, pleural, knobs.guard)
    s_dim = restore(y_dim, geo, solver=solver, params=params, gamma=gamma,
                    **solver_args)
    alines = detect_alines(s_dim, pleural, knobs)
    candidates = detect_bline_candidates(s_dim, pleural, knobs)
    blines = filter_zlines(candidates, alines, y_dim, pleural, knobs)
    _log.info("%s: pleural at depth %.1f, %d A-line(s), %d of %d B-line "
              "candidate(s) kept", name or "image", pleural.spatial_depth,
              len(alines), len(blines), len(candidates))
    return DetectionResult(pleural=pleural, alines=alines, blines=blines,
                           candidates=candidates)
