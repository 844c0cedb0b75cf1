"""Class catalog models.

A class is a taxon/status combination such as ``Osmia bicornis - Prepupa``.
Its group and whitelist flag are not intrinsic: they are assigned by the
label-cap protocol (see ``sparsedet.synth.protocol``).
"""

from __future__ import annotations

import hashlib
from typing import Self

from pydantic import BaseModel, Field, model_validator

from sparsedet.models.enums import ClassGroup, StatusCode


class ClassSpec(BaseModel):
    """Identity of one detection class."""

    id: int = Field(ge=0)
    name: str = Field(description='"Taxon - Status" display name')
    status_code: StatusCode
    group: ClassGroup = ClassGroup.MINORITY
    whitelisted: bool = Field(default=False, description="CFPL masking applies to this class")

    @model_validator(mode="after")
    def _validate_whitelist_is_majority(self) -> Self:
        if self.whitelisted and self.group != ClassGroup.MAJORITY:
            msg = f"class {self.id} ({self.name}) is whitelisted but not a majority class"
            raise ValueError(msg)
        return self


class ClassCatalog(BaseModel):
    """Ordered, contiguous set of classes."""

    classes: list[ClassSpec] = Field(default_factory=list)

    @model_validator(mode="after")
    def _validate_contiguous_ids(self) -> Self:
        ids = [c.id for c in self.classes]
        if ids != list(range(len(ids))):
            msg = f"class ids must be contiguous from 0 in order, got {ids}"
            raise ValueError(msg)
        return self

    def __len__(self) -> int:
        return len(self.classes)

    def __getitem__(self, class_id: int) -> ClassSpec:
        return self.classes[class_id]

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.classes]

    @property
    def whitelist(self) -> set[int]:
        return {c.id for c in self.classes if c.whitelisted}

    def ids_in(self, group: ClassGroup) -> list[int]:
        return [c.id for c in self.classes if c.group == group]

    @property
    def fingerprint(self) -> str:
        """SHA-256 of the canonical JSON form."""
        return hashlib.sha256(self.model_dump_json().encode()).hexdigest()

    def with_groups(self, majority: set[int]) -> ClassCatalog:
        """Return a copy where ``majority`` ids are majority + whitelisted, the rest minority."""
        return ClassCatalog(
            classes=[
                c.model_copy(
                    update={
                        "group": ClassGroup.MAJORITY if c.id in majority else ClassGroup.MINORITY,
                        "whitelisted": c.id in majority,
                    }
                )
                for c in self.classes
            ]
        )
