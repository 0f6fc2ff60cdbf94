from wearauth.learn.calibration import Calibration, calibrate
from wearauth.learn.kernels import Kernel
from wearauth.learn.model import CLASSIFIERS, DEFAULT_PARAMS, TrainedModel, train_model
from wearauth.learn.svm import OneClassSvmModel, SvmModel, ocsvm_train, smo_train

__all__ = ["Calibration", "calibrate", "Kernel", "CLASSIFIERS", "DEFAULT_PARAMS", "TrainedModel",
           "train_model", "OneClassSvmModel", "SvmModel", "ocsvm_train", "smo_train"]
