// Page wiring: login, tabs, and the six screens. All state changes go
// through ApiClient; this file only renders what the API returns.

import { ApiClient, ApiError } from "./api.js";
import { escapeHtml, renderHighlights } from "./highlight.js";
import { renderGraphSvg, truncateToBucketPrefix, bucketOrder } from "./graphview.js";
import { Poller } from "./poller.js";
import { createViewState, setRefreshInterval, type Tab } from "./state.js";
import { TriageController, mergeCandidates, sortQueue } from "./triage.js";
import {
  SOURCE_KINDS_BY_TYPE,
  type DataType,
  type KnowledgeGraphDoc,
  type PaCandidate,
  type PaJob,
} from "./types.js";

const API_BASE = (window as { AM_API_BASE?: string }).AM_API_BASE ?? "http://127.0.0.1:8787";

const api = new ApiClient(API_BASE);
const state = createViewState();
const triageCtl = new TriageController(api);

const TABS: { id: Tab; label: string }[] = [
  { id: "repos", label: "Repositories" },
  { id: "collection", label: "Collection" },
  { id: "sca", label: "SCA" },
  { id: "pa", label: "PA Triage" },
  { id: "search", label: "Search" },
  { id: "graph", label: "Graph" },
];

const DATA_TYPES: DataType[] = ["issue", "pr", "commit"];

let statusPoller: Poller | null = null;
let jobPoller: Poller | null = null;
let currentJob: PaJob | null = null;
let queue: PaCandidate[] = [];
let lastGraph: KnowledgeGraphDoc | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function notify(message: string, kind: "error" | "info" = "error"): void {
  const box = el<HTMLDivElement>("notices");
  const notice = document.createElement("div");
  notice.className = `notice ${kind}`;
  notice.innerHTML = `<span>${escapeHtml(message)}</span><button>×</button>`;
  notice.querySelector("button")!.addEventListener("click", () => notice.remove());
  box.appendChild(notice);
}

function describeError(error: unknown): string {
  if (error instanceof ApiError) {
    if (error.status === 429 && error.resetAt) {
      const seconds = Math.max(0, Math.round((Date.parse(error.resetAt) - Date.now()) / 1000));
      return `Rate limited upstream; resets in ${seconds}s (${error.resetAt})`;
    }
    return `${error.status}: ${error.message}`;
  }
  return error instanceof Error ? error.message : String(error);
}

async function guard<T>(work: () => Promise<T>): Promise<T | null> {
  try {
    return await work();
  } catch (error) {
    notify(describeError(error));
    return null;
  }
}

function repoParts(): [string, string] | null {
  if (!state.repo || !state.repo.includes("/")) {
    notify("select a repository first", "info");
    return null;
  }
  const [owner, name] = state.repo.split("/", 2);
  return [owner, name];
}

// -- login --------------------------------------------------------------------

async function doLogin(register: boolean): Promise<void> {
  const username = el<HTMLInputElement>("login-user").value.trim();
  const password = el<HTMLInputElement>("login-pass").value;
  await guard(async () => {
    if (register) await api.register(username, password);
    const session = await api.login(username, password);
    state.token = session.token;
    state.username = session.username;
    state.role = session.role;
    el("login-panel").classList.add("hidden");
    el("app-panel").classList.remove("hidden");
    el("whoami").textContent = `${session.username} (${session.role})`;
    await selectTab(state.activeTab);
  });
}

async function doLogout(): Promise<void> {
  await guard(() => api.logout());
  state.token = null;
  el("app-panel").classList.add("hidden");
  el("login-panel").classList.remove("hidden");
  statusPoller?.stop();
  jobPoller?.stop();
}

// -- repositories -----------------------------------------------------------------

async function renderRepos(): Promise<void> {
  const repos = await guard(() => api.listRepos());
  if (repos === null) return;
  const rows = repos
    .map((r) => {
      const slug = `${r.ref.owner}/${r.ref.name}`;
      const releases = r.releases
        .map(
          (rel) =>
            `<a href="${api.releaseDownloadUrl(r.ref.owner, r.ref.name, rel.tag_name)}">` +
            `${escapeHtml(rel.tag_name)}</a>`,
        )
        .join(" ");
      const selected = state.repo === slug ? " selected" : "";
      return (
        `<tr class="repo-row${selected}" data-slug="${escapeHtml(slug)}">` +
        `<td class="pick">${escapeHtml(slug)}</td>` +
        `<td>${r.releases.length} releases ${releases}</td>` +
        `<td><button class="rm" data-slug="${escapeHtml(slug)}">delete</button></td></tr>`
      );
    })
    .join("");
  el("repo-table").innerHTML =
    `<tr><th>repository</th><th>releases</th><th></th></tr>${rows}`;
  document.querySelectorAll<HTMLTableRowElement>(".repo-row .pick").forEach((cell) => {
    cell.addEventListener("click", () => {
      state.repo = cell.parentElement!.getAttribute("data-slug");
      el("current-repo").textContent = state.repo ?? "none";
      void renderRepos();
    });
  });
  document.querySelectorAll<HTMLButtonElement>("#repo-table .rm").forEach((button) => {
    button.addEventListener("click", async () => {
      const [owner, name] = button.dataset.slug!.split("/", 2);
      await guard(() => api.deleteRepo(owner, name));
      await renderRepos();
    });
  });
}

async function addRepo(): Promise<void> {
  const owner = el<HTMLInputElement>("repo-owner").value.trim();
  const name = el<HTMLInputElement>("repo-name").value.trim();
  const offline = el<HTMLInputElement>("repo-offline").checked;
  const added = await guard(() => api.addRepo(owner, name, offline));
  if (added) {
    state.repo = `${added.ref.owner}/${added.ref.name}`;
    el("current-repo").textContent = state.repo;
    await renderRepos();
  }
}

// -- collection ---------------------------------------------------------------------

async function refreshStatusTable(): Promise<void> {
  const parts = state.repo?.split("/", 2);
  if (!parts) return;
  const [owner, name] = parts;
  const cells = await Promise.all(
    DATA_TYPES.map(async (type) => {
      try {
        const cursor = await api.collectStatus(owner, name, type);
        const attrs = `data-type="${type}" data-status="${cursor.status}"`;
        const resume =
          cursor.status === "error"
            ? `<button class="resume" data-type="${type}">resume</button>`
            : "";
        const err = cursor.last_error ? ` — ${escapeHtml(cursor.last_error)}` : "";
        return (
          `<tr ${attrs}><td>${type}</td><td class="st ${cursor.status}">${cursor.status}</td>` +
          `<td>${cursor.items_done} items / ${cursor.pages_done} pages${err}</td><td>${resume}</td></tr>`
        );
      } catch {
        return `<tr data-type="${type}" data-status="none"><td>${type}</td><td class="st">not started</td><td></td><td></td></tr>`;
      }
    }),
  );
  el("status-table").innerHTML =
    `<tr><th>type</th><th>status</th><th>progress</th><th></th></tr>${cells.join("")}`;
  document.querySelectorAll<HTMLButtonElement>("#status-table .resume").forEach((button) => {
    button.addEventListener("click", () => void startCollect(button.dataset.type as DataType));
  });
}

async function startCollect(type: DataType): Promise<void> {
  const parts = repoParts();
  if (!parts) return;
  const [owner, name] = parts;
  await guard(() => api.startCollect(owner, name, type));
  await refreshStatusTable();
}

function armStatusPoller(): void {
  statusPoller?.stop();
  statusPoller = new Poller(refreshStatusTable, state.refreshIntervalS);
  statusPoller.start();
}

// -- SCA ---------------------------------------------------------------------------------

async function runScaIdentify(): Promise<void> {
  const parts = repoParts();
  if (!parts) return;
  const [owner, name] = parts;
  const mask = el<HTMLInputElement>("sca-mask").checked;
  const units = await guard(() => api.scaIdentify(owner, name, state.dataType, mask));
  if (units === null) return;
  const total = units.reduce((n, u) => n + u.spans.length, 0);
  el("sca-summary").textContent = `${total} keyword hits in ${units.length} text units`;
  el("sca-results").innerHTML = units
    .map(
      (u) =>
        `<div class="unit"><div class="meta">${escapeHtml(u.source_kind)} · ` +
        `<a href="${escapeHtml(u.url)}">${escapeHtml(u.url)}</a> · ${escapeHtml(u.author)}</div>` +
        `<div class="text">${renderHighlights(u.text, u.spans)}</div></div>`,
    )
    .join("");
  const exportLink = el<HTMLAnchorElement>("sca-export");
  exportLink.href = api.scaExportUrl(owner, name, state.dataType);
  exportLink.classList.remove("hidden");
}

// -- PA triage -------------------------------------------------------------------------------

async function enqueuePaJob(): Promise<void> {
  const parts = repoParts();
  if (!parts) return;
  const job = await guard(() => api.paIdentify(state.repo!, state.dataType));
  if (!job) return;
  currentJob = job;
  jobPoller?.stop();
  jobPoller = new Poller(async () => {
    if (!currentJob) return;
    currentJob = await api.job(currentJob.id);
    el("pa-job").textContent =
      `job ${currentJob.id}: ${currentJob.state} ` +
      `(${currentJob.processed_units}/${currentJob.total_units} units)` +
      (currentJob.error ? ` — ${currentJob.error}` : "");
    if (currentJob.state === "done" || currentJob.state === "failed") {
      jobPoller?.stop();
      await refreshQueue();
    }
  }, 1);
  jobPoller.start();
}

async function refreshQueue(): Promise<void> {
  if (!state.repo) return;
  const polled = await guard(() => api.candidates(state.repo!, state.dataType, "pending"));
  if (polled === null) return;
  queue = sortQueue(mergeCandidates(polled, triageCtl)).filter((c) => c.status === "pending");
  state.queuePosition = Math.min(state.queuePosition, Math.max(0, queue.length - 1));
  renderQueue();
}

function renderQueue(): void {
  const rows = queue
    .map((c, i) => {
      const active = i === state.queuePosition ? " active" : "";
      const blocked = triageCtl.isBlocked(c.id) ? " disabled" : "";
      return (
        `<div class="candidate${active}" data-id="${c.id}">` +
        `<span class="score">${c.score.toFixed(3)}</span>` +
        `<span class="sentence">${escapeHtml(c.sentence.text)}</span>` +
        `<span class="meta">${escapeHtml(c.unit.source_kind)} · ` +
        `<a href="${escapeHtml(c.unit.source_url)}">source</a></span>` +
        `<button class="confirm"${blocked} data-id="${c.id}">confirm (c)</button>` +
        `<button class="reject"${blocked} data-id="${c.id}">reject (x)</button></div>`
      );
    })
    .join("");
  el("pa-queue").innerHTML = rows || "<p>No pending candidates.</p>";
  document.querySelectorAll<HTMLButtonElement>("#pa-queue .confirm").forEach((b) =>
    b.addEventListener("click", () => void decideCandidate(b.dataset.id!, "confirm")),
  );
  document.querySelectorAll<HTMLButtonElement>("#pa-queue .reject").forEach((b) =>
    b.addEventListener("click", () => void decideCandidate(b.dataset.id!, "reject")),
  );
  const parts = state.repo?.split("/", 2);
  if (parts) {
    const [owner, name] = parts;
    const link = el<HTMLAnchorElement>("pa-export");
    link.href = api.paExportUrl(owner, name, state.dataType);
    link.classList.remove("hidden");
  }
}

async function decideCandidate(id: string, decision: "confirm" | "reject"): Promise<void> {
  // Disable immediately; the controller guarantees at most one request.
  document
    .querySelectorAll<HTMLButtonElement>(`#pa-queue button[data-id="${id}"]`)
    .forEach((b) => (b.disabled = true));
  const outcome = await triageCtl.decide(id, decision);
  if (outcome.kind === "failed") {
    notify(outcome.error ?? "triage failed");
    document
      .querySelectorAll<HTMLButtonElement>(`#pa-queue button[data-id="${id}"]`)
      .forEach((b) => (b.disabled = false));
    return;
  }
  if (outcome.kind === "applied" && outcome.candidate?.status === "confirmed") {
    const counter = el("confirmed-count");
    counter.textContent = String(Number(counter.textContent || "0") + 1);
  }
  queue = queue.filter((c) => c.id !== id);
  renderQueue();
}

function handleQueueKeys(event: KeyboardEvent): void {
  if (state.activeTab !== "pa" || !queue.length) return;
  const current = queue[state.queuePosition];
  if (event.key === "j") {
    state.queuePosition = Math.min(state.queuePosition + 1, queue.length - 1);
    renderQueue();
  } else if (event.key === "k") {
    state.queuePosition = Math.max(state.queuePosition - 1, 0);
    renderQueue();
  } else if (event.key === "c" && current) {
    void decideCandidate(current.id, "confirm");
  } else if (event.key === "x" && current) {
    void decideCandidate(current.id, "reject");
  }
}

// -- search ------------------------------------------------------------------------------------

async function runSearch(): Promise<void> {
  const parts = repoParts();
  if (!parts) return;
  const q = el<HTMLInputElement>("search-q").value;
  const scope = Array.from(
    document.querySelectorAll<HTMLInputElement>("#search-scope input:checked"),
  ).map((c) => c.value);
  const result = await guard(() => api.search(state.repo!, state.dataType, q, scope));
  if (result === null) return;
  el("search-summary").textContent = `${result.hits.length} hits`;
  el("search-results").innerHTML = result.hits
    .map((hit, i) => {
      const firstLine = hit.text.split("\n")[0];
      const lineSpans = hit.spans.filter((s) => s.end <= firstLine.length);
      return (
        `<div class="hit"><div class="meta">${escapeHtml(hit.source_kind)} · ` +
        `<a href="${escapeHtml(hit.url)}">${escapeHtml(hit.url)}</a>` +
        ` <button class="detail" data-i="${i}">detail</button></div>` +
        `<div class="line">${renderHighlights(firstLine, lineSpans)}</div>` +
        `<div class="full hidden">${renderHighlights(hit.text, hit.spans)}</div></div>`
      );
    })
    .join("");
  document.querySelectorAll<HTMLButtonElement>("#search-results .detail").forEach((button) =>
    button.addEventListener("click", () => {
      button.closest(".hit")!.querySelector(".full")!.classList.toggle("hidden");
    }),
  );
}

function renderScopePickers(): void {
  el("search-scope").innerHTML = SOURCE_KINDS_BY_TYPE[state.dataType]
    .map(
      (kind) =>
        `<label><input type="checkbox" value="${kind}" checked> ${kind}</label>`,
    )
    .join(" ");
}

// -- graph ------------------------------------------------------------------------------------

async function loadGraph(): Promise<void> {
  const parts = repoParts();
  if (!parts) return;
  const [owner, name] = parts;
  const dimension = el<HTMLSelectElement>("kg-dimension").value;
  const include = Array.from(
    document.querySelectorAll<HTMLInputElement>("#kg-include input:checked"),
  ).map((c) => c.value);
  const doc = await guard(() => api.knowledgeGraph(owner, name, dimension, include));
  if (!doc) return;
  lastGraph = doc;
  const slider = el<HTMLInputElement>("kg-slider");
  const buckets = bucketOrder(doc);
  slider.max = String(buckets.length);
  slider.value = String(buckets.length);
  renderGraphFrame();
}

function renderGraphFrame(): void {
  if (!lastGraph) return;
  const upto = Number(el<HTMLInputElement>("kg-slider").value);
  const frame = truncateToBucketPrefix(lastGraph, upto);
  el("kg-label").textContent =
    `${frame.nodes.length} nodes / ${frame.edges.length} edges (bucket prefix ${upto})`;
  el("kg-canvas").innerHTML = renderGraphSvg(frame);
}

// -- tabs --------------------------------------------------------------------------------------

async function selectTab(tab: Tab): Promise<void> {
  state.activeTab = tab;
  document.querySelectorAll<HTMLButtonElement>("#tabs button").forEach((b) => {
    b.classList.toggle("active", b.dataset.tab === tab);
  });
  document.querySelectorAll<HTMLElement>(".screen").forEach((s) => {
    s.classList.toggle("hidden", s.id !== `screen-${tab}`);
  });
  statusPoller?.stop();
  if (tab === "repos") await renderRepos();
  if (tab === "collection") {
    await refreshStatusTable();
    armStatusPoller();
  }
  if (tab === "search") renderScopePickers();
  if (tab === "pa") await refreshQueue();
}

function wire(): void {
  el("login-go").addEventListener("click", () => void doLogin(false));
  el("login-register").addEventListener("click", () => void doLogin(true));
  el("logout").addEventListener("click", () => void doLogout());
  el("tabs").innerHTML = TABS.map(
    (t) => `<button data-tab="${t.id}">${t.label}</button>`,
  ).join("");
  document.querySelectorAll<HTMLButtonElement>("#tabs button").forEach((b) =>
    b.addEventListener("click", () => void selectTab(b.dataset.tab as Tab)),
  );
  el("repo-add").addEventListener("click", () => void addRepo());
  DATA_TYPES.forEach((type) => {
    el(`collect-${type}`).addEventListener("click", () => void startCollect(type));
  });
  el<HTMLInputElement>("refresh-interval").addEventListener("change", (event) => {
    const input = event.target as HTMLInputElement;
    try {
      setRefreshInterval(state, Number(input.value));
      armStatusPoller();
    } catch (error) {
      notify(describeError(error));
      input.value = String(state.refreshIntervalS);
    }
  });
  el<HTMLSelectElement>("data-type").addEventListener("change", (event) => {
    state.dataType = (event.target as HTMLSelectElement).value as DataType;
    renderScopePickers();
  });
  el("sca-run").addEventListener("click", () => void runScaIdentify());
  el("pa-run").addEventListener("click", () => void enqueuePaJob());
  el("pa-refresh").addEventListener("click", () => void refreshQueue());
  el("search-go").addEventListener("click", () => void runSearch());
  el("kg-load").addEventListener("click", () => void loadGraph());
  el("kg-slider").addEventListener("input", renderGraphFrame);
  document.addEventListener("keydown", handleQueueKeys);
}

document.addEventListener("DOMContentLoaded", wire);
