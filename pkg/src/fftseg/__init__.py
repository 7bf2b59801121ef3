"""FFT-input U-Net segmentation: from-scratch FFT and convolution layers,
hand-rolled backprop, DICE/IoU metrics, peak + DBSCAN object counting, and a
convolution/training benchmark harness."""

from .core import Rng, grid_new, resize_bilinear
from .fft import FftPlan, fft1d, fft2d, fft_conv2d, naive_dft2, direct_conv2d
from .metrics import dice_coefficient, iou, mean_iou
from .postproc import ClusterLabeling, CountParams, count_objects, dbscan, local_maxima, max_filter
from .data import Sample, SyntheticSpec, generate, load_dataset, read_pgm, split, write_dataset, write_pgm
from .training import AdamState, EpochReport, TrainConfig, adam_step, dice_loss, predict, train
from .unet import CheckpointError, UNetConfig, UNetModel, parameter_count
from .bench import BenchRecord, TrainStepReport, bench_conv, bench_train_step

__version__ = "0.1.0"

__all__ = [
    "Rng", "grid_new", "resize_bilinear",
    "FftPlan", "fft1d", "fft2d", "fft_conv2d", "naive_dft2", "direct_conv2d",
    "dice_coefficient", "iou", "mean_iou",
    "ClusterLabeling", "CountParams", "count_objects", "dbscan", "local_maxima", "max_filter",
    "Sample", "SyntheticSpec", "generate", "load_dataset", "read_pgm", "split",
    "write_dataset", "write_pgm",
    "AdamState", "EpochReport", "TrainConfig", "adam_step", "dice_loss", "predict", "train",
    "CheckpointError", "UNetConfig", "UNetModel", "parameter_count",
    "BenchRecord", "TrainStepReport", "bench_conv", "bench_train_step",
]
