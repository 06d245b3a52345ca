from .checkpoint import Checkpoint, MAGIC, FORMAT_VERSION, save_checkpoint, load_checkpoint
