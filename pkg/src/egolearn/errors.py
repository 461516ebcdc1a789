"""Exception types shared across the package."""


class EgoLearnError(Exception):
    """Base class for all egolearn errors."""


class MissingDataset(EgoLearnError):
    """The dataset directory does not exist or holds no ego files."""

    def __init__(self, directory, detail):
        self.directory = str(directory)
        super().__init__(f"{directory}: {detail}")


class MissingFile(EgoLearnError):
    """A required per-ego dataset file is absent."""

    def __init__(self, ego, suffix):
        self.ego = ego
        self.suffix = suffix
        super().__init__(f"ego {ego}: missing required file {ego}{suffix}")


class ParseError(EgoLearnError):
    """A dataset file contains a malformed line."""

    def __init__(self, path, lineno, message):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {message}")


class UnknownNode(EgoLearnError):
    """A node id was requested that is not part of the graph."""

    def __init__(self, node):
        self.node = node
        super().__init__(f"node {node} is not in the graph")


class EmptyCorpus(EgoLearnError):
    """A walk corpus with no tokens was handed to a trainer."""


class NonFiniteInput(EgoLearnError):
    """A loss kernel received NaN or infinite vector entries."""


class CorruptFile(EgoLearnError):
    """An on-disk artifact fails its own header/shape validation."""

    def __init__(self, path, message):
        self.path = str(path)
        super().__init__(f"{path}: {message}")


class MissingEmbedding(EgoLearnError):
    """A node needed for feature assembly never received a vector."""

    def __init__(self, token, ego=None, alter=None):
        self.token = token
        self.ego = ego
        self.alter = alter
        ctx = ""
        if ego is not None or alter is not None:
            ctx = f" (pair ego={ego}, alter={alter})"
        super().__init__(f"no embedding for node {token}{ctx}")


class InvalidLabelRow(EgoLearnError):
    """A training row has no positive label in softmax mode."""


class TooFewInstances(EgoLearnError):
    """Fewer instances than cross-validation folds."""


class StageDependencyError(EgoLearnError):
    """A pipeline stage was invoked before its prerequisite stage."""

    def __init__(self, missing_stage, wanted_by, detail=""):
        self.missing_stage = missing_stage
        self.wanted_by = wanted_by
        extra = f" ({detail})" if detail else ""
        super().__init__(
            f"stage '{wanted_by}' needs artifacts from stage "
            f"'{missing_stage}'; run '{missing_stage}' first{extra}"
        )
