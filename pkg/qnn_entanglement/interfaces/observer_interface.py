from abc import ABC, abstractmethod


class TrainingObserver(ABC):
    @abstractmethod
    def update(self, record, event_type, event_data):
        """Called after every epoch and when training stops"""
        pass
