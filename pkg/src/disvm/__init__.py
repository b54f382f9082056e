"""Domain-independent SVM for multi-domain transfer classification.

A kernel SVM whose training objective adds a dependence penalty tying the
decision values to one-hot experiment/subject information, together with
standard baselines (kernel SVM, PCA, dependence-minimizing projections), a
nested cross-validation benchmark protocol, synthetic multi-domain data
generation, and a CLI.
"""

from .baselines import (ProjectionModel, SvmModel, fit_mida, fit_pca,
                        fit_smida, fit_svm, svm_decision_values, svm_predict,
                        transform)
from .bench import (CvReport, Method, Protocol, TransferTask, cross_validate,
                    grid_search, make_tasks, sensitivity_sweep)
from .dataio import SchemaError, read_dataset, write_dataset
from .datagen import SynthConfig, generate_synthetic
from .domain import Dataset, DomainMatrix, encode_domains, recode_labels
from .hsic import hsic, simplified_hsic
from .kernels import KernelSpec, centering_matrix, gram, sym_eig_top
from .model import DisvmModel, decision_values, fit, predict
from .qp import QpError, QpProblem, QpSolution, kkt_residuals, solve_qp

__all__ = [
    "CvReport", "Dataset", "DisvmModel", "DomainMatrix", "KernelSpec",
    "Method", "ProjectionModel", "Protocol", "QpError", "QpProblem",
    "QpSolution", "SchemaError", "SvmModel", "SynthConfig", "TransferTask",
    "centering_matrix", "cross_validate", "decision_values", "encode_domains",
    "fit", "fit_mida", "fit_pca", "fit_smida", "fit_svm", "generate_synthetic",
    "gram", "grid_search", "hsic", "kkt_residuals", "make_tasks", "predict",
    "read_dataset", "recode_labels", "sensitivity_sweep", "simplified_hsic",
    "solve_qp", "svm_decision_values", "svm_predict", "sym_eig_top",
    "transform", "write_dataset",
]
