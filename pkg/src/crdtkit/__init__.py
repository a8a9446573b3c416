"""Composable hybrid op-based/state-based CRDT collaboration kernel."""

from .clock import VectorClock
from .codec import BACKEND as CODEC_BACKEND
from .collab import Collab, CObject, CPrimitive, Init
from .containers import ArchiveRecord, CList, CListEntry, CSet
from .envelope import MessageEnvelope, decode_batch, decode_line, encode_batch, encode_line
from .errors import ContractError, CrdtError, DecodeError, LoadError
from .ids import Dot, new_replica_id
from .locallist import LocalList
from .primitives import CCounter, CVar
from .recipes import CIngredient, CRecipe, CScaleNum, Unit
from .runtime import Delivery, Mode, Runtime, UpdateMeta
from .saves import DocumentSave, MergeContext, SaveNode
from .textlist import CText, CValueList
from .totalorder import END, START, CTotalOrder, Position

__all__ = [
    "ArchiveRecord",
    "CCounter",
    "CIngredient",
    "CList",
    "CListEntry",
    "CObject",
    "CODEC_BACKEND",
    "CPrimitive",
    "CRecipe",
    "CScaleNum",
    "CSet",
    "CText",
    "CTotalOrder",
    "CValueList",
    "CVar",
    "Collab",
    "ContractError",
    "CrdtError",
    "DecodeError",
    "Delivery",
    "DocumentSave",
    "Dot",
    "END",
    "Init",
    "LoadError",
    "LocalList",
    "MergeContext",
    "MessageEnvelope",
    "Mode",
    "Position",
    "Runtime",
    "SaveNode",
    "START",
    "Unit",
    "UpdateMeta",
    "VectorClock",
    "decode_batch",
    "decode_line",
    "encode_batch",
    "encode_line",
    "new_replica_id",
]

__version__ = "0.1.0"
