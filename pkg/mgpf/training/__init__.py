from mgpf.training.datasets import BenchmarkImageDataset, collate_cases
from mgpf.training.trainers import TrainingReport, train_control_branch, train_denoiser, train_shape_classifier
