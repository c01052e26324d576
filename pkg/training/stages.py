from typing import Dict, Optional, TypedDict

import numpy as np

from griddata.types import FieldSeries
from maunet.models import MaunetLightModel, MaunetModel
from training.config import GT, KR, MP, TEACHER, TrainConfig
from training.trainer import TrainedModel, predict_series, train
from utils.logger import log_duration


class State(TypedDict, total=False):
    inputs: FieldSeries
    targets: FieldSeries
    cfg: TrainConfig
    seeds: Dict[str, int]
    teacher: TrainedModel
    gt: TrainedModel
    teacher_prediction: FieldSeries
    mp: TrainedModel
    kr: TrainedModel


def stage_seeds(seed: int) -> Dict[str, int]:
    """
    Initialization and loop seeds for every stage, derived from one seed.

    GT and MP share the student initialization so the two differ only in
    their targets.
    """
    init_teacher, init_student, loop_teacher, loop_gt, loop_mp, loop_kr = (
        np.random.SeedSequence(seed).generate_state(6, dtype=np.uint32).tolist()
    )
    return {
        "init_teacher": init_teacher, "init_student": init_student,
        TEACHER: loop_teacher, GT: loop_gt, MP: loop_mp, KR: loop_kr,
    }


def _stage_cfg(state: State, tag: str) -> TrainConfig:
    return state["cfg"].model_copy(update={"seed": state["seeds"][tag]})


def teacher_stage(state: State):
    model = MaunetModel(seed=state["seeds"]["init_teacher"])
    with log_duration("Stage teacher: MAUNet on ground truth"):
        trained = train(model, state["inputs"], state["targets"], _stage_cfg(state, TEACHER), TEACHER)
    return {"teacher": trained}


def gt_stage(state: State):
    model = MaunetLightModel(seed=state["seeds"]["init_student"])
    with log_duration("Stage GT: MAUNet-Light on ground truth"):
        trained = train(model, state["inputs"], state["targets"], _stage_cfg(state, GT), GT)
    return {"gt": trained}


def teacher_predict_stage(state: State):
    with log_duration("Stage teacher_predict: eval-mode teacher outputs over the training inputs"):
        prediction = predict_series(state["teacher"], state["inputs"])
    return {"teacher_prediction": prediction}


def mp_stage(state: State):
    model = MaunetLightModel(seed=state["seeds"]["init_student"])
    with log_duration("Stage MP: MAUNet-Light on teacher predictions"):
        trained = train(model, state["inputs"], state["teacher_prediction"], _stage_cfg(state, MP), MP)
    return {"mp": trained}


def kr_stage(state: State):
    model = MaunetLightModel(seed=state["seeds"]["init_student"])
    init = state["mp"].params.snapshot()
    with log_duration("Stage KR: refine MP weights on ground truth"):
        trained = train(model, state["inputs"], state["targets"], _stage_cfg(state, KR), KR, init=init)
    return {"kr": trained}
