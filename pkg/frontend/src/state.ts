// Session-local view state. Everything durable lives server-side.

import type { DataType } from "./types.js";

export type Tab = "repos" | "collection" | "sca" | "pa" | "search" | "graph";

export interface ViewState {
  token: string | null;
  username: string | null;
  role: "user" | "guest" | null;
  repo: string | null;
  dataType: DataType;
  activeTab: Tab;
  refreshIntervalS: number;
  queuePosition: number;
}

export function createViewState(): ViewState {
  return {
    token: null,
    username: null,
    role: null,
    repo: null,
    dataType: "issue",
    activeTab: "repos",
    refreshIntervalS: 10,
    queuePosition: 0,
  };
}

export function setRefreshInterval(state: ViewState, seconds: number): void {
  if (!Number.isFinite(seconds) || seconds < 1) {
    throw new RangeError("refresh interval must be at least 1 second");
  }
  state.refreshIntervalS = Math.floor(seconds);
}
