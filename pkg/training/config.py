from pydantic import BaseModel, Field

TEACHER = "TEACHER"
GT = "GT"
MP = "MP"
KR = "KR"
VARIANTS = (TEACHER, GT, MP, KR)


class TrainConfig(BaseModel):
    """Optimizer, batching and early-stopping settings of one training run"""
    learning_rate: float = Field(1e-3, gt=0, description="Adam step size")
    beta1: float = Field(0.9, ge=0, lt=1, description="First-moment decay")
    beta2: float = Field(0.999, ge=0, lt=1, description="Second-moment decay")
    epsilon: float = Field(1e-8, gt=0, description="Adam denominator offset")
    batch_size: int = Field(16, ge=1, description="Days per mini-batch")
    max_epochs: int = Field(500, ge=1, description="Epoch limit")
    patience: int = Field(20, ge=1, description="Non-improving epochs tolerated before stopping")
    val_fraction: float = Field(0.2, gt=0, lt=0.5, description="Chronological tail share held out for validation")
    seed: int = Field(7, description="Seed for initialization, shuffling and dropout")
