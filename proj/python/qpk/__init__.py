"""Statevector QNN, tangent/path kernels, kernel SVM and the XOR benchmark."""

from ._core import (
    __version__,
    accuracy,
    effective_qpk_gram,
    generate_xor,
    gradient,
    gradient_fd,
    mlp_train,
    oracle_label,
    param_deviation,
    predict,
    psd_report,
    qntk,
    qntk_gram,
    qpk_gram,
    rf_feature_count,
    rf_gram,
    single_qubit_predict,
    svm_predict,
    svm_train,
    train_qnn,
)

__all__ = [
    "__version__",
    "accuracy",
    "effective_qpk_gram",
    "generate_xor",
    "gradient",
    "gradient_fd",
    "mlp_train",
    "oracle_label",
    "param_deviation",
    "predict",
    "psd_report",
    "qntk",
    "qntk_gram",
    "qpk_gram",
    "rf_feature_count",
    "rf_gram",
    "single_qubit_predict",
    "svm_predict",
    "svm_train",
    "train_qnn",
]
