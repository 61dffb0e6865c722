from .types import ConditionEntry, ConditionParams, ConditionReport, NonlinearityModel
from .catalog import CATALOG, model_from_mapping, parse_model, power_diffusion, remark_family, semilinear
from .functions import eval_dG, eval_G, eval_H
from .conditions import check_conditions, check_raz_implies_GH, classify_regime

__all__ = [
    'CATALOG',
    'ConditionEntry',
    'ConditionParams',
    'ConditionReport',
    'NonlinearityModel',
    'check_conditions',
    'check_raz_implies_GH',
    'classify_regime',
    'eval_G',
    'eval_H',
    'eval_dG',
    'model_from_mapping',
    'parse_model',
    'power_diffusion',
    'remark_family',
    'semilinear',
]
