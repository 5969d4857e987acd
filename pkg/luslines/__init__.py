from .checkpointStepper import CheckpointStepper
from .fixedStepper import FixedStepper
from .toleranceStepper import ToleranceStepper
from .errors import (LuslinesError, ParameterError, ConfigError, FormatError,
                     DimensionError, DivergenceError, DegenerateRootError,
                     PleuralNotFoundError, MissingFileError, StorageError)
from .images import (Image, Geometry, Sinogram, normalize, pad_to,
                     load_image, save_image, load_sinogram, save_sinogram)
from .radon import forward_radon, inverse_radon, adjoint_inverse
from .cauchy import (ProxParams, cauchy_penalty, solve_prox_cubic,
                     cauchy_prox, cauchy_prox_grads)
from .cpsSolver import estimate_lipschitz, cps_solve
from .ducps import (DucpsParams, ducps_init, ducps_forward, ducps_backward,
                    save_params, load_params)
from .losses import ssim, ssim_loss_and_grad, neighbor_subsample, \
    n2n_loss_and_grads
from .training import TrainConfig, train
from .phantom import PhantomSpec, GroundTruth, generate_phantom
from .lineIdentification import (Detection, DetectionKnobs, DetectionResult,
                                 local_maxima, detect_pleural,
                                 dim_above_pleural, detect_alines,
                                 detect_bline_candidates, filter_zlines,
                                 detect_pipeline)
from .scoring import score_detection, match_detections, ScoreReport
from .config import RunConfig, load_config
