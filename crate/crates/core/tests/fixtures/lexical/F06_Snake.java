/** Persists raw_event rows. */
class EventStore {
    long last_event_id = 9L;

    void store_raw_event(long the_id) {
        last_event_id = the_id;
    }
}
