from mgpf.grammar.prompt_parser import parse_prompt, render_prompt, split_alignment
from mgpf.grammar.vocabulary import Vocabulary
