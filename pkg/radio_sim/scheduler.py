from typing import Callable, Optional, Sequence


class RoundRobinScheduler:
    """
    One grant per cell per TTI, full band.
    UEs with a pending retransmission preempt the rotation; the rotation pointer
    advances past every granted UE.
    """

    def __init__(self, ue_ids: Sequence[int]):
        self.ue_ids = list(ue_ids)
        self._next = 0

    def _rotation(self):
        n = len(self.ue_ids)
        for k in range(n):
            yield (self._next + k) % n

    def schedule(self, has_retx: Callable[[int], bool], has_data: Callable[[int], bool]) -> Optional[int]:
        if not self.ue_ids:
            return None
        for predicate in (has_retx, has_data):
            for idx in self._rotation():
                ue_id = self.ue_ids[idx]
                if predicate(ue_id):
                    self._next = (idx + 1) % len(self.ue_ids)
                    return ue_id
        return None
