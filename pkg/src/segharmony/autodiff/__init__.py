from .tensor import (
    Tape, Tensor, add, backward, concat, concat_last_dim, cross_entropy, div, dropout,
    elementwise, exp, getitem, layer_norm, log, matmul, mean, mse, mul, power, relu,
    reshape, scale, sigmoid, softmax_rows, softplus, sub, swap_last, tanh, tensor,
    transpose, tsum, unfold1d,
)
from .optim import Adam
from .module import Linear, Module, glorot, parameter
from .checkpoint import config_hash, load_checkpoint, save_checkpoint
from .gradcheck import numeric_grad, check_grads

__all__ = [
    "Tape", "Tensor", "add", "backward", "concat", "concat_last_dim", "cross_entropy",
    "div", "dropout", "elementwise", "exp", "getitem", "layer_norm", "log", "matmul",
    "mean", "mse", "mul", "power", "relu", "reshape", "scale", "sigmoid", "softmax_rows",
    "softplus", "sub", "swap_last", "tanh", "tensor", "transpose", "tsum", "unfold1d",
    "Adam", "Linear", "Module", "glorot", "parameter",
    "config_hash", "load_checkpoint", "save_checkpoint", "numeric_grad", "check_grads",
]
