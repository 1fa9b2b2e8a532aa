from .anova import anova_f, f_sf
from .ga import GaConfig, GaResult, ga_select
from .norm import NormStats, apply_norm, fit_norm
from .svm import Kernel, SvmModel, decision_function, svm_predict, svm_train
from .validation import COVER, STEGO, CvReport, Dataset, kfold_cv, stratified_folds

__all__ = [
    "COVER", "STEGO", "CvReport", "Dataset", "GaConfig", "GaResult", "Kernel",
    "NormStats", "SvmModel", "anova_f", "apply_norm", "decision_function", "f_sf",
    "fit_norm", "ga_select", "kfold_cv", "stratified_folds", "svm_predict", "svm_train",
]
