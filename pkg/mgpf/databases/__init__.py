from .checkpoint_database import CheckpointDatabase
