"""Robust discriminant analysis for heterogeneous elliptical data.

The core method (FEMDA) estimates, for every class, a location and a
trace-normalized scatter by a fixed point with weights ``1/t`` (``t`` the
squared Mahalanobis distance), and classifies with the scale-free rule
``argmax_k -[(1/m) log|Sigma_k| + log t_k]``. Classical and robust
baselines (QDA, LDA, Huber-plug-in QDA, t-QDA, GQDA, RGQDA), synthetic
generators, UCI loaders and a benchmark CLI are included.
"""

__version__ = "0.1.0"

from .classifiers import (  # noqa: E402
    FittedModel,
    Kind,
    Prediction,
    evaluate,
    femda_scores,
    fit_model,
    predict,
    predict_labels,
)
from .estimators import FitOptions, fit_femda, fit_gaussian, fit_huber_m, fit_student_em  # noqa: E402

__all__ = [
    "__version__",
    "FitOptions",
    "FittedModel",
    "Kind",
    "Prediction",
    "evaluate",
    "femda_scores",
    "fit_femda",
    "fit_gaussian",
    "fit_huber_m",
    "fit_student_em",
    "fit_model",
    "predict",
    "predict_labels",
]
