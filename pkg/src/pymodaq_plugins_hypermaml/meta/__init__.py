from .schedules import switch_lambda, lr_schedule
from .optim import Adam, AdamState, adam_step
from .maml import MamlConfig, maml_adapt, maml_meta_step, maml_meta_gradient, gradient_steps, forward
from .hypermaml import (HyperMamlConfig, AdaptedModel, enhance_support, hyper_update, hypermaml_adapt,
                        hypermaml_meta_step, hypermaml_meta_gradient, predict_query, support_predictions)
from .algorithms import ALGORITHMS, MANDATORY_METHODS, MetaAlgorithm, make_algorithm
