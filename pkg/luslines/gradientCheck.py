"""Central finite differences for checking hand-derived gradients.
"""

from __future__ import division
from __future__ import unicode_literals

import numpy as np

__docformat__ = 'restructuredtext'

__all__ = ["numerical_grad", "relative_error"]


def numerical_grad(func, x, h=1e-6, indices=None):
    r"""Central-difference gradient of a scalar function of an array.

    Parameters
    ----------
    func : callable
        Maps an array shaped like `x` to a float.
    x : ndarray
        Point of evaluation; not modified.
    h : float
        Perturbation applied to one element at a time (default
        :math:`10^{-6}`).
    indices : iterable of tuple, optional
        Elements to perturb (default all).  Elements not perturbed are
        left at 0 in the result.

    Returns
    -------
    ndarray
        :math:`(f(x + h e_i) - f(x - h e_i)) / 2h` for every chosen `i`.

    Examples
    --------
    >>> x = np.array([[1., 2.], [3., -1.]])
    >>> grad = numerical_grad(lambda a: np.sum(a**3), x)
    >>> print(np.allclose(grad, 3 * x**2, rtol=1e-8))
    True
    >>> print(numerical_grad(lambda a: np.sum(a**3), x, indices=[(0, 1)]))
    [[ 0. 12.]
     [ 0.  0.]]
    """
    x = np.array(x, dtype=float)
    grad = np.zeros_like(x)
    if indices is None:
        indices = np.ndindex(*x.shape)
    for index in indices:
        index = tuple(index)
        original = x[index]
        x[index] = original + h
        plus = func(x.copy())
        x[index] = original - h
        minus = func(x.copy())
        x[index] = original
        grad[index] = (plus - minus) / (2 * h)
    return grad


def relative_error(actual, expected):
    r"""Relative distance :math:`\|a - e\| / \|e\|` of two arrays.

    Returns the absolute distance when `expected` vanishes.

    Examples
    --------
    >>> print(relative_error([1., 2.], [1., 2.]))
    0.0
    >>> print(round(relative_error([3., 4.1], [3., 4.]), 6))
    0.02
    """
    actual = np.asarray(actual, dtype=float)
    expected = np.asarray(expected, dtype=float)
    scale = np.linalg.norm(expected)
    distance = np.linalg.norm(actual - expected)
    if scale == 0:
        return float(distance)
    return float(distance / scale)
