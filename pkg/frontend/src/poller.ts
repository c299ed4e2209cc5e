// Interval polling with an immediate first tick and no overlapping runs:
// if a tick is still in flight when the timer fires, that beat is skipped.

export class Poller {
  private timer: ReturnType<typeof setInterval> | null = null;
  private inFlight = false;

  constructor(
    private readonly tick: () => Promise<void>,
    private intervalS: number,
  ) {
    if (intervalS < 1) throw new RangeError("poll interval must be at least 1 second");
  }

  get running(): boolean {
    return this.timer !== null;
  }

  start(): void {
    if (this.timer !== null) return;
    void this.beat();
    this.timer = setInterval(() => void this.beat(), this.intervalS * 1000);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  setIntervalSeconds(seconds: number): void {
    if (seconds < 1) throw new RangeError("poll interval must be at least 1 second");
    this.intervalS = seconds;
    if (this.timer !== null) {
      this.stop();
      this.start();
    }
  }

  private async beat(): Promise<void> {
    if (this.inFlight) return;
    this.inFlight = true;
    try {
      await this.tick();
    } catch {
      // a failed poll must not kill the loop; the next beat retries
    } finally {
      this.inFlight = false;
    }
  }
}
