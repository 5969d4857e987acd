from __future__ import division
from __future__ import unicode_literals

from luslines.stepper import Stepper

__all__ = ["FixedStepper"]


class FixedStepper(Stepper):
    r"""Stepper that takes a fixed number of iterations per step.

    Used for the layers of an unrolled network and for the epochs of a
    training stage.

    Parameters
    ----------
    start : int
        Number of iterations already completed.
    stop : int
        Number of iterations to reach.
    size : int
        Iterations per step (default 1).
    record : bool
        Whether to keep history of steps, errors, values, etc. (default False).
    label : str
        Name of one iteration in error messages (default "iteration").

    """

    __doc__ += Stepper._stepper_test(StepperClass="FixedStepper",
                                     stepper_args="stop=7, record=True",
                                     steps=7,
                                     current=7,
                                     bound=0.01)
