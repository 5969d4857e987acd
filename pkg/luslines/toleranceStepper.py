from __future__ import division
from __future__ import unicode_literals

from luslines.stepper import Stepper

__all__ = ["ToleranceStepper"]


class ToleranceStepper(Stepper):
    r"""Stepper that iterates until the scaled error drops below 1.

    Each step is a single iteration.  The stepper finishes after the first
    step reported with an `error` below 1, or after `stop` iterations,
    whichever comes first.  :attr:`converged` tells which.

    Parameters
    ----------
    start : int
        Number of iterations already completed.
    stop : int
        Largest number of iterations to perform.
    record : bool
        Whether to keep history of steps, errors, values, etc. (default False).
    label : str
        Name of one iteration in error messages (default "iteration").

    """

    __doc__ += Stepper._stepper_test(StepperClass="ToleranceStepper",
                                     stepper_args="stop=500, record=True",
                                     steps=9,
                                     current=9,
                                     bound=0.01)

    def __init__(self, start, stop, record=False, label="iteration"):
        self.converged = False
        super(ToleranceStepper, self).__init__(start=start,
                                               stop=stop,
                                               size=1,
                                               record=record,
                                               label=label)

    def _succeeded(self, error):
        if error is not None and error < 1.:
            self.converged = True
        return True

    def _done(self):
        return self.converged or super(ToleranceStepper, self)._done()
