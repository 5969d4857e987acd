from __future__ import division
from __future__ import unicode_literals

import numpy as np

from luslines.stepper import Stepper

__all__ = ["CheckpointStepper"]


class CheckpointStepper(Stepper):
    r"""Stepper that stops at fixed iteration counts.

    Each step runs from the previous checkpoint to the next one, so a
    nested :class:`~luslines.fixedStepper.FixedStepper` can cover the
    iterations of the stage, e.g., the epochs that share one learning rate.

    Parameters
    ----------
    start : int
        Number of iterations already completed.
    stops : iterable of int
        Increasing checkpoints, all greater than `start`.
    stop : int or float, optional
        Finish of range to step over (default `np.inf`).  In the event that
        any of `stops` exceed `stop`, the stepper will terminate at `stop`.
    record : bool
        Whether to keep history of steps, errors, values, etc. (default False).
    label : str
        Name of one iteration in error messages (default "iteration").

    """

    __doc__ += Stepper._stepper_test(StepperClass="CheckpointStepper",
                                     stepper_args="stops=[5, 10, 20]"
                                                  ", record=True",
                                     steps=3,
                                     current=20,
                                     bound=0.2,
                                     first=5)

    def __init__(self, start, stops, stop=np.inf, record=False,
                 label="iteration"):
        self._wantstops = iter(stops)
        self._target = None

        super(CheckpointStepper, self).__init__(start=start,
                                                stop=stop,
                                                record=record,
                                                label=label)

    def _adaptStep(self):
        """Calculate next step after success

        Returns the distance to the next checkpoint not yet reached.

        Returns
        -------
        int
            New step.

        """
        if self._target is None or self._target <= self.current:
            self._target = next(self._wantstops)
        return self._target - self.current
