"""Image and sinogram containers, their geometry, and their file formats.

All intensities are reals in [0, 1]; files are scaled on load.  Image
pixels are indexed ``[row, column]`` with row 0 at the top (the skin
surface for an ultrasound frame).  A :class:`Sinogram` is indexed
``[r, omega]``, the rows running over signed offsets from the image center
and the columns over line-normal angles in degrees.
"""

from __future__ import division
from __future__ import unicode_literals

import os
from dataclasses import dataclass, field

import numpy as np
from PIL import Image as PILImage
from PIL import UnidentifiedImageError

from luslines.errors import (DimensionError, FormatError, ParameterError,
                             StorageError)

__docformat__ = 'restructuredtext'

__all__ = ["Image", "Geometry", "Sinogram", "MIN_SIZE",
           "load_image", "save_image", "normalize", "pad_to",
           "save_sinogram", "load_sinogram"]

MIN_SIZE = 16

_SINO_MAGIC = b"SINO"
_SINO_HEADER = np.dtype([("magic", "S4"),
                         ("n_r", "<u4"),
                         ("n_angles", "<u4"),
                         ("reserved", "<u4")])

# Pillow mode -> divisor bringing intensities to [0, 1]
_GRAY_SCALES = {"L": 255.,
                "I;16": 65535.,
                "I;16L": 65535.,
                "I;16B": 65535.,
                "I": 65535.}


def _frozen(array):
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Image(object):
    """Grayscale image with intensities in [0, 1].

    Parameters
    ----------
    pixels : array_like
        Two-dimensional array of finite intensities, ``[row, column]``.

    Images entering a transform must be at least 16 pixels on each side;
    smaller images are allowed as containers (see :func:`pad_to`).

    Examples
    --------
    >>> img = Image([[0., 0.5], [1., 0.25]])
    >>> img.height, img.width
    (2, 2)
    >>> img.pixels[0, 0] = 3.
    Traceback (most recent call last):
    ...
    ValueError: assignment destination is read-only
    >>> Image([[0., np.nan]])
    Traceback (most recent call last):
    ...
    luslines.errors.ParameterError: image pixels must be finite
    """
    pixels: np.ndarray

    def __post_init__(self):
        pixels = _frozen(self.pixels)
        if pixels.ndim != 2 or pixels.size == 0:
            raise DimensionError("image pixels must be a nonempty 2-D array, "
                                 "got shape {}".format(pixels.shape))
        if not np.all(np.isfinite(pixels)):
            raise ParameterError("image pixels must be finite")
        object.__setattr__(self, "pixels", pixels)

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def shape(self):
        return self.pixels.shape


@dataclass(frozen=True)
class Geometry(object):
    r"""Sampling grid of a parallel-beam Radon transform.

    A line is parameterized by its signed offset :math:`r` from the image
    center and the angle :math:`\omega` of its normal, so that it holds the
    centered points :math:`(i, j)` with :math:`i \cos\omega + j \sin\omega
    = r`, where :math:`i = \mathrm{col} - (W - 1)/2` and :math:`j =
    \mathrm{row} - (H - 1)/2` (:math:`j` positive downward).  A horizontal
    line at depth :math:`d` therefore sits at :math:`\omega = 90^\circ`,
    :math:`r = d - (H - 1)/2`.

    Parameters
    ----------
    n_angles : int
        Number of angles; `n_angles * angle_step` must equal 180.
    angle_step : float
        Angular spacing in degrees.
    r_min, r_max : float
        Signed offset range; must be symmetric and cover half the image
        diagonal.
    r_step : float
        Offset spacing in pixels.
    image_h, image_w : int
        Size of the images the grid belongs to.

    Examples
    --------
    >>> geo = Geometry.default(128, 160)
    >>> geo.n_angles, geo.r_max, geo.shape
    (180, 103.0, (207, 180))
    >>> print(geo.depth_to_r(40.))
    -23.5
    >>> Geometry.default(128, 160, angle_step=7.)
    Traceback (most recent call last):
    ...
    luslines.errors.ParameterError: angle_step 7.0 does not divide 180 degrees
    """
    n_angles: int
    angle_step: float
    r_min: float
    r_max: float
    r_step: float
    image_h: int
    image_w: int

    def __post_init__(self):
        if self.image_h < MIN_SIZE or self.image_w < MIN_SIZE:
            raise DimensionError("images smaller than {0}x{0} are not "
                                 "supported, got {1}x{2}"
                                 .format(MIN_SIZE, self.image_h,
                                         self.image_w))
        if self.n_angles < 1 or not np.isclose(self.n_angles
                                               * self.angle_step, 180.):
            raise ParameterError("n_angles * angle_step must equal 180, "
                                 "got {} * {}".format(self.n_angles,
                                                      self.angle_step))
        if not self.r_step > 0:
            raise ParameterError("r_step must be positive, got {}"
                                 .format(self.r_step))
        if self.r_min != -self.r_max:
            raise ParameterError("offset range must be symmetric, got "
                                 "[{}, {}]".format(self.r_min, self.r_max))
        if self.r_max < np.hypot(self.image_h, self.image_w) / 2:
            raise ParameterError("r_max {} does not cover half the image "
                                 "diagonal".format(self.r_max))

    @classmethod
    def default(cls, image_h, image_w, angle_step=1., r_step=1.):
        """Grid covering [0, 180) degrees and ceil(half diagonal) offsets.
        """
        n_angles = int(round(180. / angle_step))
        if not np.isclose(n_angles * angle_step, 180.):
            raise ParameterError("angle_step {} does not divide 180 degrees"
                                 .format(angle_step))
        half = np.ceil(np.hypot(image_h, image_w) / 2)
        r_max = float(np.ceil(half / r_step) * r_step)
        return cls(n_angles=n_angles, angle_step=float(angle_step),
                   r_min=-r_max, r_max=r_max, r_step=float(r_step),
                   image_h=int(image_h), image_w=int(image_w))

    @classmethod
    def for_image(cls, img, angle_step=1., r_step=1.):
        return cls.default(img.height, img.width,
                           angle_step=angle_step, r_step=r_step)

    @property
    def n_r(self):
        return int(round((self.r_max - self.r_min) / self.r_step)) + 1

    @property
    def shape(self):
        return (self.n_r, self.n_angles)

    @property
    def angles(self):
        """`ndarray` of angles in degrees, one per sinogram column.
        """
        return np.arange(self.n_angles) * self.angle_step

    @property
    def offsets(self):
        """`ndarray` of signed offsets, one per sinogram row.
        """
        return self.r_min + np.arange(self.n_r) * self.r_step

    def depth_to_r(self, depth):
        """Offset of a horizontal line at `depth` (rows from the top).
        """
        return depth - (self.image_h - 1) / 2.

    def r_to_depth(self, r):
        return r + (self.image_h - 1) / 2.

    def check_image(self, img):
        if (img.height, img.width) != (self.image_h, self.image_w):
            raise DimensionError("image is {}x{} but geometry expects {}x{}"
                                 .format(img.height, img.width,
                                         self.image_h, self.image_w))


@dataclass(frozen=True, eq=False)
class Sinogram(object):
    """Radon-domain grid of line integrals on a :class:`Geometry`.

    Parameters
    ----------
    geometry : :class:`Geometry`
    values : array_like
        Finite ``(geometry.n_r, geometry.n_angles)`` array.
    """
    geometry: Geometry
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = _frozen(self.values)
        if values.shape != self.geometry.shape:
            raise DimensionError("sinogram shape {} does not match geometry "
                                 "shape {}".format(values.shape,
                                                   self.geometry.shape))
        if not np.all(np.isfinite(values)):
            raise ParameterError("sinogram values must be finite")
        object.__setattr__(self, "values", values)

    @property
    def shape(self):
        return self.values.shape

    def peak(self):
        """(r, omega) of the largest cell, ties going to the first.
        """
        row, col = np.unravel_index(np.argmax(self.values), self.shape)
        return self.geometry.offsets[row], self.geometry.angles[col]


def normalize(img):
    """Bring intensities into [0, 1].

    Images already within [0, 1] are returned unchanged; otherwise the
    intensities are rescaled linearly from their own range.

    Examples
    --------
    >>> img = normalize(Image([[-1., 0.], [1., 3.]]))
    >>> print(img.pixels.tolist())
    [[0.0, 0.25], [0.5, 1.0]]
    >>> normalize(img) is img
    True
    >>> print(normalize(Image([[2., 2.]])).pixels.tolist())
    [[0.0, 0.0]]
    """
    pixels = img.pixels
    lo, hi = pixels.min(), pixels.max()
    if lo >= 0 and hi <= 1:
        return img
    if hi > lo:
        return Image((pixels - lo) / (hi - lo))
    return Image(np.zeros_like(pixels))


def pad_to(img, h, w):
    """Center `img` on an `h` x `w` canvas of zeros.

    Examples
    --------
    >>> print(pad_to(Image([[1.]]), 3, 3).pixels.tolist())
    [[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]]
    >>> padded = pad_to(Image(np.ones((100, 100))), 480, 600)
    >>> rows, cols = np.nonzero(padded.pixels)
    >>> print(rows.min(), cols.min(), rows.max(), cols.max())
    190 250 289 349
    >>> pad_to(padded, 480, 600) is padded
    True
    >>> pad_to(padded, 240, 600)
    Traceback (most recent call last):
    ...
    luslines.errors.DimensionError: cannot pad 480x600 image to 240x600
    """
    if h < img.height or w < img.width:
        raise DimensionError("cannot pad {}x{} image to {}x{}"
                             .format(img.height, img.width, h, w))
    if (h, w) == img.shape:
        return img
    top = (h - img.height) // 2
    left = (w - img.width) // 2
    canvas = np.zeros((h, w))
    canvas[top:top + img.height, left:left + img.width] = img.pixels
    return Image(canvas)


def load_image(path):
    """Read a grayscale PGM (P2/P5) or PNG file.

    Intensities are divided by the maximum of the file's bit depth, 255 for
    8-bit and 65535 for 16-bit files.

    Raises
    ------
    ~luslines.errors.FormatError
        If the file cannot be read, is not PGM or PNG, is a colour image, or
        has an unsupported bit depth.

    Examples
    --------
    >>> import tempfile
    >>> from PIL import Image as PILImage
    >>> tmp = tempfile.mkdtemp()
    >>> path = os.path.join(tmp, "frame.pgm")
    >>> raw = np.zeros((32, 32), dtype=np.uint8)
    >>> raw[3, 4] = 255
    >>> PILImage.fromarray(raw).save(path)
    >>> img = load_image(path)
    >>> print(img.shape, img.pixels[3, 4], img.pixels.sum())
    (32, 32) 1.0 1.0

    16-bit files are scaled by 65535.

    >>> raw16 = np.zeros((32, 32), dtype=np.int32)
    >>> raw16[0, 0] = 32768
    >>> PILImage.fromarray(raw16).save(os.path.join(tmp, "deep.pgm"))
    >>> print(round(load_image(os.path.join(tmp, "deep.pgm")).pixels[0, 0], 5))
    0.50001

    Colour images are refused by name.

    >>> PILImage.new("RGB", (32, 32)).save(os.path.join(tmp, "rgb.png"))
    >>> load_image(os.path.join(tmp, "rgb.png"))  # doctest: +ELLIPSIS
    Traceback (most recent call last):
    ...
    luslines.errors.FormatError: ...rgb.png: colour mode 'RGB' is not supported, only grayscale
    """
    try:
        with PILImage.open(path) as pil:
            fmt, mode = pil.format, pil.mode
            if fmt not in ("PPM", "PNG"):
                raise FormatError("{}: format {} is not supported, only PGM "
                                  "and PNG".format(path, fmt))
            if mode == "1":
                raise FormatError("{}: bit depth 1 is not supported, only 8 "
                                  "and 16 bits".format(path))
            if mode not in _GRAY_SCALES:
                raise FormatError("{}: colour mode '{}' is not supported, "
                                  "only grayscale".format(path, mode))
            pixels = np.asarray(pil, dtype=float)
    except (OSError, UnidentifiedImageError, SyntaxError) as exc:
        raise FormatError("{}: unreadable image ({})".format(path, exc))

    if pixels.ndim != 2:
        raise FormatError("{}: expected a single channel".format(path))
    return Image(pixels / _GRAY_SCALES[mode])


def save_image(img, path, bits=8):
    """Write `img` as a binary PGM, clipping intensities to [0, 1].

    Parameters
    ----------
    img : :class:`Image`
    path : str
    bits : int
        8 (default) or 16.

    Examples
    --------
    >>> import tempfile
    >>> path = os.path.join(tempfile.mkdtemp(), "out.pgm")
    >>> img = Image(np.linspace(0., 1., 16 * 16).reshape(16, 16))
    >>> save_image(img, path)
    >>> print(abs(load_image(path).pixels - img.pixels).max() <= 0.5 / 255)
    True
    >>> save_image(img, path, bits=16)
    >>> print(abs(load_image(path).pixels - img.pixels).max() <= 0.5 / 65535)
    True
    """
    scaled = np.clip(img.pixels, 0., 1.)
    if bits == 8:
        pil = PILImage.fromarray(np.round(scaled * 255).astype(np.uint8))
    elif bits == 16:
        pil = PILImage.fromarray(np.round(scaled * 65535).astype(np.int32))
    else:
        raise ParameterError("bits must be 8 or 16, got {}".format(bits))
    try:
        pil.save(path, format="PPM")
    except OSError as exc:
        raise StorageError("{}: cannot write image ({})".format(path, exc))


def save_sinogram(sino, path):
    """Write `sino` as a 16-byte header followed by little-endian float32.

    Examples
    --------
    >>> import tempfile
    >>> tmp = tempfile.mkdtemp()
    >>> geo = Geometry.default(16, 16, angle_step=18.)
    >>> values = np.random.default_rng(0).random(geo.shape)
    >>> sino = Sinogram(geo, values.astype(np.float32))
    >>> path = os.path.join(tmp, "random.sino")
    >>> save_sinogram(sino, path)
    >>> os.path.getsize(path) == 16 + 4 * values.size
    True
    >>> back = load_sinogram(path, angle_step=18.)
    >>> print(np.array_equal(back.values, sino.values), back.geometry == geo)
    True True

    Corrupt and empty files are refused.

    >>> data = bytearray(open(path, "rb").read())
    >>> data[:4] = b"SINX"
    >>> _ = open(path, "wb").write(bytes(data))
    >>> load_sinogram(path)  # doctest: +ELLIPSIS
    Traceback (most recent call last):
    ...
    luslines.errors.FormatError: ...: bad magic b'SINX', expected b'SINO'
    >>> _ = open(path, "wb").close()
    >>> load_sinogram(path)  # doctest: +ELLIPSIS
    Traceback (most recent call last):
    ...
    luslines.errors.FormatError: ...: truncated header (0 of 16 bytes)
    """
    geo = sino.geometry
    header = np.zeros(1, dtype=_SINO_HEADER)
    header["magic"] = _SINO_MAGIC
    header["n_r"], header["n_angles"] = geo.shape
    header["reserved"] = (geo.image_h << 16) | geo.image_w
    try:
        with open(path, "wb") as fobj:
            fobj.write(header.tobytes())
            fobj.write(sino.values.astype("<f4").tobytes())
    except OSError as exc:
        raise StorageError("{}: cannot write sinogram ({})".format(path, exc))


def load_sinogram(path, geometry=None, angle_step=None, r_step=1.):
    """Read a file written by :func:`save_sinogram`.

    Parameters
    ----------
    path : str
    geometry : :class:`Geometry`, optional
        Grid of the stored values.  By default the grid is rebuilt from the
        image size recorded in the header.
    angle_step : float, optional
        Angular spacing used when rebuilding the grid (default
        180 / stored number of angles).
    r_step : float
        Offset spacing used when rebuilding the grid (default 1).
    """
    try:
        with open(path, "rb") as fobj:
            data = fobj.read()
    except OSError as exc:
        raise FormatError("{}: unreadable sinogram ({})".format(path, exc))

    if len(data) < _SINO_HEADER.itemsize:
        raise FormatError("{}: truncated header ({} of {} bytes)"
                          .format(path, len(data), _SINO_HEADER.itemsize))
    header = np.frombuffer(data[:_SINO_HEADER.itemsize],
                           dtype=_SINO_HEADER)[0]
    if header["magic"] != _SINO_MAGIC:
        raise FormatError("{}: bad magic {!r}, expected {!r}"
                          .format(path, bytes(header["magic"]), _SINO_MAGIC))
    n_r, n_angles = int(header["n_r"]), int(header["n_angles"])
    payload = data[_SINO_HEADER.itemsize:]
    if len(payload) != 4 * n_r * n_angles:
        raise FormatError("{}: payload holds {} bytes, expected {}"
                          .format(path, len(payload), 4 * n_r * n_angles))

    if geometry is None:
        reserved = int(header["reserved"])
        image_h, image_w = reserved >> 16, reserved & 0xFFFF
        if image_h == 0 or image_w == 0:
            raise FormatError("{}: image size not recorded, a geometry is "
                              "required".format(path))
        if angle_step is None:
            angle_step = 180. / n_angles
        geometry = Geometry.default(image_h, image_w,
                                    angle_step=angle_step, r_step=r_step)
    if geometry.shape != (n_r, n_angles):
        raise FormatError("{}: stored grid {}x{} does not match geometry {}"
                          .format(path, n_r, n_angles, geometry.shape))

    values = np.frombuffer(payload, dtype="<f4").reshape(n_r, n_angles)
    return Sinogram(geometry, values.astype(float))
