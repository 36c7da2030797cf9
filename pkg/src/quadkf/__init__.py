"""Quadratic-update extended and unscented Kalman filters."""

from .filters import (
    FILTERS,
    AugmentedGain,
    GaussianBelief,
    SigmaSet,
    UtParams,
    ekf_predict,
    ekf_step,
    filter_step,
    linear_gain,
    linearized_measurement_moments,
    qekf_step,
    quadratic_gain,
    quadratic_update,
    qukf_step,
    sigma_points,
    ukf_predict,
    ukf_step,
    unscented_measurement_moments,
)
from .moments import (
    MeasurementSpaceMoments,
    NoiseMoments,
    StateHighMoments,
    augment_measurement_noise,
    discrete_noise_moments,
    gaussian_closure,
    gaussian_noise_moments,
    isserlis_kurtosis,
)

__version__ = "0.1.0"
