from __future__ import unicode_literals

import numpy as np

from luslines.errors import DivergenceError

__docformat__ = 'restructuredtext'

__all__ = ["Step", "Stepper"]


class Step(object):
    """Object describing a block of iterations to take.

    Parameters
    ----------
    begin : int
        Number of iterations completed before this step.
    end : int
        Number of iterations completed once this step succeeds.
    stepper : :class:`~luslines.stepper.Stepper`
        The stepper that generated this step.
    """
    def __init__(self, begin, end, stepper):
        self.begin = begin
        self.end = end
        self.stepper = stepper

    @property
    def size(self):
        return self.end - self.begin

    def succeeded(self, value=None, error=None):
        """Report the outcome of the step.

        Parameters
        ----------
        value : float or ndarray, optional
            User-determined value that characterizes the step (e.g., an
            objective or a loss).  Must be finite.
        error : float, optional
            User-determined error, normalized so that values below 1 mean
            "good enough".  Must be finite.

        Returns
        -------
        bool
            Whether the step was accepted.

        Raises
        ------
        ~luslines.errors.DivergenceError
            If `value` or `error` is not finite.
        """
        return self.stepper.succeeded(step=self, value=value, error=error)


class Stepper(object):
    r"""Iteration-count stepper base class.

    A stepper hands out :class:`~luslines.stepper.Step` objects until it is
    done.  The caller performs the work of each step and then calls
    :meth:`~luslines.stepper.Step.succeeded`; a step that is never
    reported is handed out again.

    Parameters
    ----------
    start : int
        Number of iterations already completed.
    stop : int or float
        Largest number of iterations to perform (may be `np.inf` for
        subclasses that decide for themselves when to stop).
    size : int
        Number of iterations in each step (default 1).
    record : bool
        Whether to keep history of steps, errors, values, etc. (default False).
    label : str
        Name of one iteration in error messages (default "iteration").

    """

    def __init__(self, start, stop, size=1, record=False, label="iteration"):
        self.start = start
        self.stop = stop
        self.size = size
        self.record = record
        self.label = label

        self.current = start
        self._steps = []
        self._values = []
        self._errors = []
        self._successes = []
        self._isDone = False

    @property
    def steps(self):
        """`ndarray` of the iteration count reached by each reported step.
        """
        return np.asarray(self._steps)

    @property
    def values(self):
        """`ndarray` of the "value" reported at each step.
        """
        return np.asarray(self._values)

    @property
    def errors(self):
        """`ndarray` of the "error" reported at each step.
        """
        return np.asarray(self._errors)

    @property
    def successes(self):
        """`ndarray` of whether each reported step was accepted.
        """
        return np.asarray(self._successes, dtype=bool)

    @property
    def iterations(self):
        """Number of iterations completed since `start`.
        """
        return self.current - self.start

    def __iter__(self):
        return self

    def __next__(self):
        """Return the next step.

        Returns
        -------
        :class:`~luslines.stepper.Step`

        Raises
        ------
        StopIteration
            If there are no further steps to take
        """
        if self._isDone or self._done():
            self._isDone = True
            raise StopIteration()

        try:
            nextStep = self._adaptStep()
        except StopIteration:
            self._isDone = True
            raise

        nextStep = self._upperBound(step=nextStep)

        return Step(begin=self.current,
                    end=self.current + nextStep,
                    stepper=self)

    def _succeeded(self, error):
        """Test if last step was successful.

        Most subclasses accept every step (the default).

        Returns
        -------
        bool
        """
        return True

    def succeeded(self, step, value=None, error=None):
        """Test if step was successful.

        Stores data about the last step.

        Parameters
        ----------
        step : :class:`~luslines.stepper.Step`
            The step to test.
        value : float or ndarray, optional
            User-determined value that characterizes the last step.
        error : float, optional
            User-determined error (positive and normalized to 1).

        Returns
        -------
        bool
            Whether step was successful.

        Raises
        ------
        ~luslines.errors.DivergenceError
            If `value` or `error` is not finite.
        """
        for name, quantity in (("value", value), ("error", error)):
            if quantity is not None and not np.all(np.isfinite(quantity)):
                self._isDone = True
                raise DivergenceError("non-finite {} at {} {}"
                                      .format(name, self.label, step.end))

        success = self._succeeded(error=error)

        if self.record:
            self._steps.append(step.end)
            self._values.append(np.nan if value is None else value)
            self._errors.append(np.nan if error is None else error)
            self._successes.append(success)

        if success:
            self.current = step.end

        return success

    def _upperBound(self, step):
        """Determine maximum step.

        Parameters
        ----------
        step : int
            Desired step.

        Returns
        -------
        int
            Smaller of `step` and the iterations remaining to `self.stop`.

        """
        return min(step, self.stop - self.current)

    def _adaptStep(self):
        """Calculate next step after success

        Subclasses may override this method (default returns `self.size`).

        Returns
        -------
        int
            New step.

        """
        return self.size

    def _done(self):
        """Determine if stepper has reached objective.

        Returns
        -------
        bool

        """
        return self.current >= self.stop

    @staticmethod
    def _stepper_test(StepperClass, stepper_args, steps, current, bound,
                      first=1):
        """Generate doctest for this Stepper

        Parameters
        ----------
        StepperClass : str
            Name of class to test.
        stepper_args : str
            Arguments to pass to initialize class.
        steps : int
            Number of steps expected to be reported.
        current : int
            Iteration count expected when the stepper finishes.
        bound : float
            Expected bound on the distance to the fixed point.
        first : int
            Iteration count reached by the first step.
        """
        test = r"""

    Examples
    --------

    >>> import numpy as np
    >>> from luslines import {StepperClass}

    We'll demonstrate on the contraction :math:`x \leftarrow x / 2 + 1`,
    whose fixed point is 2.  The scaled "error" is the relative change of
    the iterate divided by a tolerance of :math:`10^{{-3}}`.

    >>> tol = 1e-3
    >>> x = 1.
    >>> stepper = {StepperClass}(start=0, {stepper_args})
    >>> for step in stepper:
    ...     new = x / 2 + 1
    ...     error = abs(new - x) / abs(x) / tol
    ...     if step.succeeded(value=new, error=error):
    ...         x = new

    >>> s = "{{}} steps, ending at iteration {{}}"
    >>> print(s.format(len(stepper.steps), stepper.current))
    {steps} steps, ending at iteration {current}

    >>> print(abs(x - 2.) < {bound})
    True

    A non-finite report ends the iteration with an error naming where it
    happened.

    >>> stepper = {StepperClass}(start=0, {stepper_args})
    >>> step = next(stepper)
    >>> step.succeeded(value=np.nan)
    Traceback (most recent call last):
    ...
    luslines.errors.DivergenceError: non-finite value at iteration {first}
    """

        return test.format(**locals())
