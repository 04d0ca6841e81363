from learner.qnetwork import QNetwork


class TargetNetwork:
    """Frozen copy of the online network, refreshed every `interval` gradient steps"""

    def __init__(self, online: QNetwork, interval: int = 2500):
        self.interval = interval
        self.net = online.copy()
        self.updates = 0
        self.last_update_step = 0

    def maybe_update(self, online: QNetwork, step: int) -> bool:
        if step > 0 and step % self.interval == 0:
            hard_target_update(self.net, online)
            self.updates += 1
            self.last_update_step = step
            return True
        return False


def hard_target_update(target: QNetwork, online: QNetwork):
    target.params = {k: v.copy() for k, v in online.params.items()}
