"""Locate concepts to forget from a caption/prompt diff and sample with combined guidance."""

__version__ = "0.1.0"

from .diffusion import (UNCONDITIONAL, LatentState, NoiseSchedule, ScoreModelSpec, Trajectory,
                        ddim_step, gm_epsilon, img2img_init, make_schedule, sample)
from .guidance import (GuidanceParams, NoisePrediction, compose_cfg, compose_laf,
                       compose_negative)
from .locate import EditPlan, LocateMode, diff_modifiers, get_common_chunk, locate, locate_text
from .metrics import EvalReport, clip_d, clip_t, inception_score, l1, toy_embed
from .text_parse import Chunk, ChunkSet, Lexicon, Token, parse, parse_chunks, tag_pos, tokenize
