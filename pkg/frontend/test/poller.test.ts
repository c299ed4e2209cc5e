import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { Poller } from "../src/poller.js";

describe("Poller", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("ticks immediately and then on every interval", async () => {
    let ticks = 0;
    const poller = new Poller(async () => {
      ticks += 1;
    }, 10);
    poller.start();
    await vi.advanceTimersByTimeAsync(0);
    expect(ticks).toBe(1);
    await vi.advanceTimersByTimeAsync(10_000);
    expect(ticks).toBe(2);
    await vi.advanceTimersByTimeAsync(20_000);
    expect(ticks).toBe(4);
    poller.stop();
    await vi.advanceTimersByTimeAsync(30_000);
    expect(ticks).toBe(4);
  });

  it("skips beats while a tick is still in flight", async () => {
    let started = 0;
    const poller = new Poller(async () => {
      started += 1;
      await new Promise((resolve) => setTimeout(resolve, 25_000));
    }, 10);
    poller.start();
    await vi.advanceTimersByTimeAsync(0);
    await vi.advanceTimersByTimeAsync(10_000); // beat skipped: first tick busy
    await vi.advanceTimersByTimeAsync(10_000);
    expect(started).toBe(1);
    await vi.advanceTimersByTimeAsync(10_000); // first tick done at 25s, next beat runs
    expect(started).toBe(2);
    poller.stop();
  });

  it("survives tick failures", async () => {
    let calls = 0;
    const poller = new Poller(async () => {
      calls += 1;
      throw new Error("boom");
    }, 10);
    poller.start();
    await vi.advanceTimersByTimeAsync(0);
    await vi.advanceTimersByTimeAsync(10_000);
    expect(calls).toBe(2);
    poller.stop();
  });

  it("rejects sub-second intervals", () => {
    expect(() => new Poller(async () => {}, 0)).toThrow(RangeError);
    const poller = new Poller(async () => {}, 5);
    expect(() => poller.setIntervalSeconds(0.5)).toThrow(RangeError);
  });
});
