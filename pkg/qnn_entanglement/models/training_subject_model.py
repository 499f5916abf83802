class TrainingSubject:
    def __init__(self):
        self._observers = []

    def attach(self, observer):
        if observer not in self._observers:
            self._observers.append(observer)

    def detach(self, observer):
        if observer in self._observers:
            self._observers.remove(observer)

    def notify(self, record, event_type, event_data):
        for observer in self._observers:
            observer.update(record, event_type, event_data)
