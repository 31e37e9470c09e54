"""Measurement: XLRS, label overlap, metrics, correlation, language ID."""

from .xlrs import XLRSRecord, XlrsProbe, cosine, xlrs, xlrs_to_csv
from .overlap import OverlapReport, label_overlap, overlap_report
from .rouge import lcs_len, rouge_l
from .metrics import primary_metric, strip_sentinels, task_metric
from .correlation import CorrelationResult, spearman_rho
from .lid import (AccidentalTranslationReport, LidModel,
                  accidental_translation_rate, lid_accuracy, lid_confidences,
                  lid_predict, train_lid)
from .tables import metric_table_csv, metric_table_markdown

__all__ = [
    "XLRSRecord", "XlrsProbe", "cosine", "xlrs", "xlrs_to_csv",
    "OverlapReport", "label_overlap", "overlap_report",
    "lcs_len", "rouge_l",
    "primary_metric", "strip_sentinels", "task_metric",
    "CorrelationResult", "spearman_rho",
    "AccidentalTranslationReport", "LidModel", "accidental_translation_rate",
    "lid_accuracy", "lid_confidences", "lid_predict", "train_lid",
    "metric_table_csv", "metric_table_markdown",
]
