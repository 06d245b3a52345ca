from .params import ParamSet, ROLES
from .init import init_params, SCHEMES
from .encoders import EncoderConfig, build_encoder, encode
from .heads import build_head, classify
from .hypernet import HyperNetConfig, build_hypernetwork, hypernet_forward
