from mgpf.benchmark.ablation import (ABLATION_ROWS, AblationResult, check_directional_trends, format_table,
                                     paired_sign_test, run_ablation)
from mgpf.benchmark.generator import generate_dataset
from mgpf.benchmark.oracles import eval_attribute_match, eval_object_generation, score_image
from mgpf.benchmark.scenes import Palette, place_objects, render_scene
from mgpf.benchmark.shapes import available_shapes, rasterize
