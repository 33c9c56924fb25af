from mgpf.processing.conditions.condition_context import ConditionContext, make_condition
from mgpf.processing.conditions.condition_strategy import ConditionStrategies
