"""VSFLOW - steady-state variably saturated groundwater flow solver."""
from . import common

# necessary for function '_'
common.setup_i18n()
