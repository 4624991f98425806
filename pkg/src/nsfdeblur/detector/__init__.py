"""Sharp-frame detection: model, losses, and quintuple assembly."""

from .losses import cosine_rows, detector_loss, loss_ce, loss_contrastive
from .model import (BiLstm, DetectorModel, FeatureCnn, LstmCell, classify,
                    detect_labels)
from .quintuples import Quintuple, build_quintuples, select_sharp_neighbors

__all__ = [
    "DetectorModel", "FeatureCnn", "BiLstm", "LstmCell",
    "classify", "detect_labels",
    "loss_ce", "loss_contrastive", "detector_loss", "cosine_rows",
    "Quintuple", "select_sharp_neighbors", "build_quintuples",
]
