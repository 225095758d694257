// Pure view: DisplayModel (plus transient expansion state) to an HTML
// string. Colors come verbatim from the wire model; nothing is derived
// client-side. Interactive elements carry data-cmd / data-expand
// attributes for event delegation in main.ts.

import { DisplayLine, DisplayModel } from "./protocol.js";

export interface ViewState {
  display: DisplayModel | null;
  banner: string | null;
  expanded: ReadonlySet<string>;
}

export function renderHtml(view: ViewState): string {
  const parts: string[] = [];
  if (view.banner !== null) {
    parts.push(`<div class="banner" role="alert">${esc(view.banner)}</div>`);
  }
  const display = view.display;
  if (!display) {
    return parts.join("") + `<div class="welcome">WAITING FOR SESSION</div>`;
  }
  parts.push(renderPhaseMenu(display));
  parts.push(`<main class="page">`);
  parts.push(renderLines(display, view.expanded));
  if (display.perf_note) {
    parts.push(`<div class="perf-note color-GREEN">${esc(display.perf_note)}</div>`);
  }
  parts.push(`</main>`);
  parts.push(renderReminderBar(display));
  if (display.popup) {
    parts.push(renderPopup(display));
  }
  return parts.join("");
}

function renderPhaseMenu(display: DisplayModel): string {
  const items = display.phase_menu
    .map((phase) => {
      const classes = ["phase-tab"];
      if (phase === display.view_phase) classes.push("selected");
      if (phase === display.phase) classes.push("live");
      return `<button class="${classes.join(" ")}" data-cmd="page ${phase}">${esc(shortPhase(phase))}</button>`;
    })
    .join("");
  return (
    `<nav class="phase-menu">` +
    `<button class="swipe" data-swipe="-1" aria-label="previous phase">&#9664;</button>` +
    items +
    `<button class="swipe" data-swipe="1" aria-label="next phase">&#9654;</button>` +
    `</nav>`
  );
}

function renderLines(display: DisplayModel, expanded: ReadonlySet<string>): string {
  const out: string[] = [];
  let group: DisplayLine[] = [];
  let groupIblock: string | null = null;

  const flush = () => {
    if (groupIblock && group.some(isPending)) {
      out.push(
        `<button class="checkall-bar" data-cmd="checkall ${groupIblock}">CHECK ALL</button>`);
    }
    group = [];
    groupIblock = null;
  };

  for (const line of display.lines) {
    const iblock = iblockOf(line);
    if (iblock !== groupIblock) {
      flush();
      groupIblock = iblock;
    }
    out.push(renderLine(line, expanded));
    if (iblock) group.push(line);
  }
  flush();
  return out.join("");
}

function iblockOf(line: DisplayLine): string | null {
  if (line.kind !== "action" && line.kind !== "check" && line.kind !== "note"
      && line.kind !== "restriction") {
    return null;
  }
  const parts = line.ref.split(".");
  return parts.length === 3 ? `${parts[0]}.${parts[1]}` : null;
}

function isPending(line: DisplayLine): boolean {
  return (
    (line.kind === "action" || line.kind === "check") &&
    (line.status === "TODO" || line.status === "POSTPONED")
  );
}

function renderLine(line: DisplayLine, expanded: ReadonlySet<string>): string {
  const classes = [`line`, `line-${line.kind}`, `color-${line.color}`, `indent-${line.indent}`];
  if (line.current) classes.push("current");
  const hasMore = line.level2 !== null || line.level3 !== null;
  const body: string[] = [];

  if (line.kind === "link") {
    return (
      `<div class="${classes.join(" ")}">` +
      `<button class="link-button" data-cmd="open ${line.ref}">${esc(line.text)}</button>` +
      `</div>`
    );
  }

  const expandAttr = hasMore ? ` data-expand="${line.ref}"` : "";
  body.push(`<span class="line-text"${expandAttr}>${esc(line.text)}${hasMore ? `<span class="more-dot">&#8942;</span>` : ""}</span>`);

  if (isPending(line)) {
    body.push(`<span class="controls">`);
    body.push(`<button class="btn-done" data-cmd="done ${line.ref}">DONE</button>`);
    if (line.status === "TODO") {
      body.push(`<button class="btn-wait" data-cmd="wait ${line.ref}">WAIT</button>`);
    }
    body.push(`</span>`);
  }

  let expansion = "";
  if (hasMore && expanded.has(line.ref)) {
    const texts: string[] = [];
    if (line.level2 !== null) texts.push(`<div class="level2 color-WHITE">${esc(line.level2)}</div>`);
    if (line.level3 !== null) texts.push(`<div class="level3 color-WHITE">${esc(line.level3)}</div>`);
    expansion = `<div class="expansion">${texts.join("")}</div>`;
  }

  return `<div class="${classes.join(" ")}" data-ref="${line.ref}">${body.join("")}</div>${expansion}`;
}

function renderReminderBar(display: DisplayModel): string {
  const entries = display.reminder_bar
    .map((r) => `<button class="reminder color-AMBER" data-cmd="resume ${r.proc}">${esc(r.title)}</button>`)
    .join("");
  return `<footer class="reminder-bar">${entries}</footer>`;
}

function renderPopup(display: DisplayModel): string {
  const popup = display.popup!;
  return (
    `<div class="popup-backdrop">` +
    `<div class="popup color-${popup.color}">` +
    `<div class="popup-title color-${popup.color}">${esc(popup.title)}${popup.ecam ? ` <span class="ecam-flag">ECAM</span>` : ""}</div>` +
    `<div class="popup-actions">` +
    `<button class="btn-accept" data-cmd="ack ${popup.proc} accept">ACCEPT</button>` +
    `<button class="btn-later" data-cmd="ack ${popup.proc} later">LATER</button>` +
    `</div></div></div>`
  );
}

function shortPhase(phase: string): string {
  return phase.replace(/_/g, " ");
}

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}
