from mgpf.models.attention import AttentionRecord, normalize_maps
from mgpf.models.bundle import ModelBundle
from mgpf.models.control_branch import ControlBranch, control_forward, fused_forward, mask_residuals
from mgpf.models.denoiser import Denoiser, TextEmbedding
from mgpf.models.diffusion import NoiseSchedule
from mgpf.models.shape_classifier import ShapeClassifier
