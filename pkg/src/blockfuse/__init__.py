"""Block-wise MS-SSIM ensemble fusion and its evaluation toolkit."""
from .fusion import FusionResult, batch_fuse, fuse, partition, sweep, sweep_dataset
from .image import augment, contrast_stretch, load_image, resize_bilinear, save_image
from .metrics import MetricReport, MsSsimParams, SsimParams, evaluate_pair, ms_ssim, psnr, ssim

__version__ = "0.1.0"
